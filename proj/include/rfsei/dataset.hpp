#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsei/signal_model.hpp"

namespace rfsei {

enum class Target : std::uint32_t { GainImbalance = 0, PhaseImbalance = 1 };

std::string to_string(Target target);
Target parse_target(const std::string& text);

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
    friend bool operator==(const Range&, const Range&) = default;
};

/// Recipe for a labelled dataset. Every frame draws its order and impairments
/// independently and uniformly from these ranges.
struct DatasetSpec {
    ModulationFamily family = ModulationFamily::Qam;
    std::vector<int> orders = {8, 16, 32, 64};
    Target target = Target::GainImbalance;
    std::size_t n_train = 100000;
    std::size_t n_val = 5000;
    std::size_t n_test = 5000;
    std::size_t frame_len = 1024;
    Range alpha{-0.9, 0.9};
    Range theta_deg{-10.0, 10.0};
    Range freq_offset{-0.1, 0.1};
    Range sps{1.2 * (1.0 + kRrcRolloff), 4.0 * (1.0 + kRrcRolloff)};
    Range snr_db{0.0, 25.0};
    std::uint64_t master_seed = 1;

    std::size_t n_frames() const { return n_train + n_val + n_test; }
    const Range& target_range() const { return target == Target::GainImbalance ? alpha : theta_deg; }

    /// Throws ErrorCode::Config when inconsistent.
    void validate() const;

    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static DatasetSpec from_json(const nlohmann::json& j);
};

/// Evenly spaced offsets of one impairment, inclusive of both endpoints.
struct EvalGrid {
    Target target = Target::GainImbalance;
    double start = -0.9;
    double stop = 0.9;
    double step = 0.01;
    std::size_t frames_per_value = 1000;
    /// When non-empty, frames_per_value frames are generated per (SNR, offset) pair at
    /// these exact SNRs; otherwise SNR is drawn from the dataset spec.
    std::vector<double> snr_values;

    std::vector<double> values() const;
    std::size_t frame_count() const;
    void validate() const;

    nlohmann::json to_json() const;
    static EvalGrid from_json(const nlohmann::json& j);
};

/// Per-frame ground truth, persisted in the optional metadata block.
struct FrameMeta {
    float alpha = 0.0f;
    float theta_deg = 0.0f;
    float freq_offset = 0.0f;
    float sps = 0.0f;
    float snr_db = 0.0f;
    std::uint32_t family = 0;
    std::uint32_t order = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const FrameMeta&, const FrameMeta&) = default;
};

/// Frames are stored interleaved (I0, Q0, I1, Q1, ...) as 32-bit floats. Frames
/// [0, n_train) are training, the next n_val validation, the rest test.
struct Dataset {
    Target target = Target::GainImbalance;
    std::size_t frame_len = 0;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    std::uint64_t master_seed = 0;
    std::vector<float> iq;
    std::vector<float> labels;
    std::vector<FrameMeta> meta;  ///< empty or one entry per frame

    std::size_t size() const { return labels.size(); }
    std::size_t n_test() const { return size() - n_train - n_val; }
    std::span<const float> frame(std::size_t i) const { return {iq.data() + i * frame_len * 2, frame_len * 2}; }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Uniform draw of one frame's impairments (the target is drawn like the rest).
ImpairmentParams draw_impairments(const DatasetSpec& spec, std::uint64_t frame_seed, ModulationScheme& scheme);

/// `threads` = 0 uses the hardware concurrency. Output does not depend on the thread count.
Dataset build_dataset(const DatasetSpec& spec, unsigned threads = 1);

Dataset build_eval_grid(const DatasetSpec& spec, const EvalGrid& grid, unsigned threads = 1);

inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kDatasetHeaderSize = 64;

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(std::span<const std::uint8_t> bytes);

/// Writes `path` atomically; when `sidecar` is given it goes to `path` with a .json extension.
void save_dataset(const std::filesystem::path& path, const Dataset& ds,
                  const std::optional<nlohmann::json>& sidecar = std::nullopt);
Dataset load_dataset(const std::filesystem::path& path);

/// CRC32 of the serialized IQ payload only.
std::uint32_t payload_crc(const Dataset& ds);

}  // namespace rfsei
