#include "rfsei/binary_io.hpp"

#include <bit>
#include <fstream>
#include <zlib.h>

namespace rfsei::io {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v)
{
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p)
{
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed)
{
    uLong crc = seed;
    // zlib takes a uInt length; feed in chunks for payloads above 4 GiB.
    const std::uint8_t* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = ::crc32(crc, p, n);
        p += n;
        left -= n;
    }
    return static_cast<std::uint32_t>(crc);
}

void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

void ByteWriter::text(std::string_view s)
{
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::f32_array(std::span<const float> v)
{
    const std::size_t start = buf_.size();
    buf_.resize(start + v.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(buf_.data() + start, v.data(), v.size() * 4);
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(v[i]);
            for (std::size_t b = 0; b < 4; ++b)
                buf_[start + 4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
    }
}

void ByteWriter::pad_to(std::size_t size)
{
    if (buf_.size() < size)
        buf_.resize(size, 0);
}

void ByteReader::need(std::size_t n) const
{
    if (n > data_.size() - pos_)
        fail(ErrorCode::Truncated, "unexpected end of data at byte " + std::to_string(pos_) + " (need " +
                                       std::to_string(n) + ", have " + std::to_string(data_.size() - pos_) + ")");
}

std::uint32_t ByteReader::u32()
{
    need(4);
    const auto v = get_le<std::uint32_t>(data_.data() + pos_);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64()
{
    need(8);
    const auto v = get_le<std::uint64_t>(data_.data() + pos_);
    pos_ += 8;
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n)
{
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::string ByteReader::text(std::size_t n)
{
    auto b = bytes(n);
    return std::string(b.begin(), b.end());
}

void ByteReader::f32_array(std::span<float> out)
{
    need(out.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), data_.data() + pos_, out.size() * 4);
        pos_ += out.size() * 4;
    } else {
        for (auto& v : out)
            v = f32();
    }
}

void ByteReader::seek(std::size_t pos)
{
    if (pos > data_.size())
        fail(ErrorCode::Truncated, "seek past end of data");
    pos_ = pos;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::uint8_t> data(size);
    in.seekg(0);
    if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size)))
        fail(ErrorCode::Io, "failed reading '" + path.string() + "'");
    return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            fail(ErrorCode::Io, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::Io, "cannot move temporary file into '" + path.string() + "'");
    }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text)
{
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void seal_with_crc(ByteWriter& w) { w.u32(crc32(w.buffer())); }

std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> file, std::size_t min_size)
{
    if (file.size() < min_size + 4)
        fail(ErrorCode::Truncated, "file too short (" + std::to_string(file.size()) + " bytes)");
    const auto body = file.first(file.size() - 4);
    ByteReader tail(file.last(4));
    const std::uint32_t stored = tail.u32();
    if (crc32(body) != stored)
        fail(ErrorCode::Checksum, "CRC32 mismatch");
    return body;
}

}  // namespace rfsei::io
