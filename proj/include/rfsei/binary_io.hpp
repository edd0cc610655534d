#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfsei/error.hpp"

namespace rfsei::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);

/// Append-only little-endian byte buffer.
class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void bytes(std::span<const std::uint8_t> b);
    void text(std::string_view s);
    void f32_array(std::span<const float> v);
    void pad_to(std::size_t size);

    std::size_t size() const { return buf_.size(); }
    std::vector<std::uint8_t>& buffer() { return buf_; }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader; running past the end raises ErrorCode::Truncated.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::span<const std::uint8_t> bytes(std::size_t n);
    std::string text(std::size_t n);
    void f32_array(std::span<float> out);
    void seek(std::size_t pos);

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Appends a CRC32 of everything written so far.
void seal_with_crc(ByteWriter& w);

/// Verifies the trailing CRC32 and returns the covered span (without the CRC).
std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> file, std::size_t min_size);

}  // namespace rfsei::io
