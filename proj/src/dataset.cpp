#include "rfsei/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <random>

#include "rfsei/binary_io.hpp"
#include "rfsei/error.hpp"
#include "rfsei/parallel.hpp"
#include "rfsei/rng.hpp"

namespace rfsei {

using nlohmann::json;

namespace {

constexpr std::uint64_t kGridStream = 0x67726964ULL << 32;

constexpr char kMagic[4] = {'R', 'F', 'P', 'D'};
constexpr std::uint32_t kFlagMeta = 1u;
constexpr std::size_t kMetaRecordSize = 36;

void check_range(const Range& r, double lo, double hi, const char* name)
{
    require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi, ErrorCode::Config,
            std::string(name) + " range is empty or not finite");
    require(r.lo >= lo && r.hi <= hi, ErrorCode::Config,
            std::string(name) + " range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) +
                "] exceeds the model limits [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

double draw(const Range& r, Rng& rng)
{
    if (r.lo == r.hi)
        return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const Range& fallback)
{
    if (j.is_null())
        return fallback;
    require(j.is_array() && j.size() == 2, ErrorCode::Config, "ranges are two-element arrays [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

FrameMeta make_meta(const ModulationScheme& scheme, const ImpairmentParams& p, std::uint64_t seed)
{
    FrameMeta m;
    m.alpha = static_cast<float>(p.alpha);
    m.theta_deg = static_cast<float>(p.theta_deg);
    m.freq_offset = static_cast<float>(p.freq_offset);
    m.sps = static_cast<float>(p.sps);
    m.snr_db = static_cast<float>(p.snr_db);
    m.family = static_cast<std::uint32_t>(scheme.family);
    m.order = static_cast<std::uint32_t>(scheme.order);
    m.seed = seed;
    return m;
}

void store_frame(Dataset& ds, std::size_t index, const IqFrame& f)
{
    float* dst = ds.iq.data() + index * ds.frame_len * 2;
    for (std::size_t n = 0; n < ds.frame_len; ++n) {
        dst[2 * n] = static_cast<float>(f.samples[n].real());
        dst[2 * n + 1] = static_cast<float>(f.samples[n].imag());
    }
}

Dataset allocate(const DatasetSpec& spec, std::size_t count)
{
    Dataset ds;
    ds.target = spec.target;
    ds.frame_len = spec.frame_len;
    ds.master_seed = spec.master_seed;
    ds.iq.resize(count * spec.frame_len * 2);
    ds.labels.resize(count);
    ds.meta.resize(count);
    return ds;
}

}  // namespace

std::string to_string(Target target) { return target == Target::GainImbalance ? "gain" : "phase"; }

Target parse_target(const std::string& text)
{
    std::string low;
    for (char c : text)
        low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "gain" || low == "gainimbalance" || low == "alpha")
        return Target::GainImbalance;
    if (low == "phase" || low == "phaseimbalance" || low == "theta")
        return Target::PhaseImbalance;
    fail(ErrorCode::Config, "unknown estimation target '" + text + "'");
}

void DatasetSpec::validate() const
{
    require(n_frames() > 0, ErrorCode::Config, "dataset must contain at least one frame");
    require(frame_len == 512 || frame_len == 1024 || frame_len == 2048, ErrorCode::Config,
            "frame length must be 512, 1024 or 2048 samples");
    require(!orders.empty(), ErrorCode::Config, "at least one modulation order is required");
    for (int o : orders)
        ModulationScheme{family, o}.validate();
    check_range(alpha, -ImpairmentParams::kAlphaLimit, ImpairmentParams::kAlphaLimit, "alpha");
    check_range(theta_deg, -ImpairmentParams::kThetaLimitDeg, ImpairmentParams::kThetaLimitDeg, "theta");
    check_range(freq_offset, -ImpairmentParams::kFreqLimit, ImpairmentParams::kFreqLimit, "frequency offset");
    check_range(snr_db, ImpairmentParams::kSnrMinDb, ImpairmentParams::kSnrMaxDb, "SNR");
    check_range(sps, 1.0, ImpairmentParams::kSpsMax, "samples per symbol");
    require(sps.lo > 1.0, ErrorCode::Config, "samples per symbol must exceed 1");
}

json DatasetSpec::to_json() const
{
    return json{{"family", rfsei::to_string(family)},
                {"orders", orders},
                {"target", rfsei::to_string(target)},
                {"n_train", n_train},
                {"n_val", n_val},
                {"n_test", n_test},
                {"frame_len", frame_len},
                {"alpha", range_json(alpha)},
                {"theta_deg", range_json(theta_deg)},
                {"freq_offset", range_json(freq_offset)},
                {"sps", range_json(sps)},
                {"snr_db", range_json(snr_db)},
                {"master_seed", master_seed}};
}

DatasetSpec DatasetSpec::from_json(const json& j)
{
    require(j.is_object(), ErrorCode::Config, "dataset spec must be a JSON object");
    DatasetSpec s;
    try {
        if (j.contains("family"))
            s.family = parse_family(j.at("family").get<std::string>());
        if (j.contains("orders"))
            s.orders = j.at("orders").get<std::vector<int>>();
        else
            s.orders = supported_orders(s.family);
        if (j.contains("target"))
            s.target = parse_target(j.at("target").get<std::string>());
        s.n_train = j.value("n_train", s.n_train);
        s.n_val = j.value("n_val", s.n_val);
        s.n_test = j.value("n_test", s.n_test);
        s.frame_len = j.value("frame_len", s.frame_len);
        s.alpha = range_from(j.value("alpha", json()), s.alpha);
        s.theta_deg = range_from(j.value("theta_deg", json()), s.theta_deg);
        s.freq_offset = range_from(j.value("freq_offset", json()), s.freq_offset);
        s.sps = range_from(j.value("sps", json()), s.sps);
        s.snr_db = range_from(j.value("snr_db", json()), s.snr_db);
        s.master_seed = j.value("master_seed", s.master_seed);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed dataset spec: ") + e.what());
    }
    return s;
}

std::vector<double> EvalGrid::values() const
{
    const auto n = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = start + step * static_cast<double>(i);
    return v;
}

std::size_t EvalGrid::frame_count() const
{
    return values().size() * frames_per_value * std::max<std::size_t>(1, snr_values.size());
}

void EvalGrid::validate() const
{
    require(std::isfinite(start) && std::isfinite(stop) && std::isfinite(step), ErrorCode::Config,
            "grid bounds must be finite");
    require(step > 0.0 && stop >= start, ErrorCode::Config, "grid must be strictly increasing");
    const double count = (stop - start) / step;
    require(std::abs(count - std::round(count)) < 1e-6, ErrorCode::Config,
            "grid step must divide the grid span evenly");
    require(frames_per_value > 0, ErrorCode::Config, "frames per value must be positive");
    for (double s : snr_values)
        require(s >= ImpairmentParams::kSnrMinDb && s <= ImpairmentParams::kSnrMaxDb, ErrorCode::Config,
                "grid SNR outside [0, 35] dB");
}

json EvalGrid::to_json() const
{
    return json{{"target", rfsei::to_string(target)}, {"start", start}, {"stop", stop}, {"step", step},
                {"frames_per_value", frames_per_value}, {"snr_values", snr_values}};
}

EvalGrid EvalGrid::from_json(const json& j)
{
    require(j.is_object(), ErrorCode::Config, "evaluation grid must be a JSON object");
    EvalGrid g;
    try {
        if (j.contains("target"))
            g.target = parse_target(j.at("target").get<std::string>());
        g.start = j.value("start", g.start);
        g.stop = j.value("stop", g.stop);
        g.step = j.value("step", g.step);
        g.frames_per_value = j.value("frames_per_value", g.frames_per_value);
        if (j.contains("snr_values"))
            g.snr_values = j.at("snr_values").get<std::vector<double>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed evaluation grid: ") + e.what());
    }
    return g;
}

ImpairmentParams draw_impairments(const DatasetSpec& spec, std::uint64_t frame_seed, ModulationScheme& scheme)
{
    auto rng = make_rng(derive_seed(frame_seed, 0x5eed));
    scheme.family = spec.family;
    scheme.order = spec.orders[std::uniform_int_distribution<std::size_t>(0, spec.orders.size() - 1)(rng)];
    ImpairmentParams p;
    p.alpha = draw(spec.alpha, rng);
    p.theta_deg = draw(spec.theta_deg, rng);
    p.freq_offset = draw(spec.freq_offset, rng);
    p.sps = draw(spec.sps, rng);
    p.snr_db = draw(spec.snr_db, rng);
    return p;
}

Dataset build_dataset(const DatasetSpec& spec, unsigned threads)
{
    spec.validate();
    const std::size_t count = spec.n_frames();
    Dataset ds = allocate(spec, count);
    ds.n_train = spec.n_train;
    ds.n_val = spec.n_val;

    parallel_for(count, threads, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(spec.master_seed, i);
        ModulationScheme scheme;
        const auto params = draw_impairments(spec, seed, scheme);
        const auto frame = synthesize_frame(scheme, params, spec.frame_len, seed);
        store_frame(ds, i, frame);
        ds.labels[i] = static_cast<float>(spec.target == Target::GainImbalance ? params.alpha : params.theta_deg);
        ds.meta[i] = make_meta(scheme, params, seed);
    });
    return ds;
}

Dataset build_eval_grid(const DatasetSpec& spec, const EvalGrid& grid, unsigned threads)
{
    spec.validate();
    grid.validate();
    require(grid.target == spec.target, ErrorCode::Config, "grid target differs from the dataset target");
    const Range& range = spec.target_range();
    const auto values = grid.values();
    require(range.contains(values.front() + 1e-12) && range.contains(values.back() - 1e-12), ErrorCode::Config,
            "evaluation grid lies outside the training range");

    const std::size_t snr_count = std::max<std::size_t>(1, grid.snr_values.size());
    const std::size_t count = values.size() * grid.frames_per_value * snr_count;
    Dataset ds = allocate(spec, count);
    // Grid frames draw from their own seed stream so they never repeat a training frame.
    const std::uint64_t grid_master = derive_seed(spec.master_seed, kGridStream);

    parallel_for(count, threads, [&](std::size_t i) {
        const std::size_t per_snr = values.size() * grid.frames_per_value;
        const std::size_t snr_index = i / per_snr;
        const std::size_t value_index = (i % per_snr) / grid.frames_per_value;
        const std::uint64_t seed = derive_seed(grid_master, i);
        ModulationScheme scheme;
        auto params = draw_impairments(spec, seed, scheme);
        const double value = std::clamp(values[value_index], range.lo, range.hi);
        if (grid.target == Target::GainImbalance)
            params.alpha = value;
        else
            params.theta_deg = value;
        if (!grid.snr_values.empty())
            params.snr_db = grid.snr_values[snr_index];
        const auto frame = synthesize_frame(scheme, params, spec.frame_len, seed);
        store_frame(ds, i, frame);
        ds.labels[i] = static_cast<float>(value);
        ds.meta[i] = make_meta(scheme, params, seed);
    });
    return ds;
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds)
{
    require(ds.iq.size() == ds.size() * ds.frame_len * 2, ErrorCode::Internal, "IQ payload size mismatch");
    require(ds.meta.empty() || ds.meta.size() == ds.size(), ErrorCode::Internal, "metadata size mismatch");
    require(ds.n_train + ds.n_val <= ds.size(), ErrorCode::Internal, "split sizes exceed frame count");

    io::ByteWriter w;
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
    w.u32(kDatasetFormatVersion);
    w.u64(ds.size());
    w.u32(static_cast<std::uint32_t>(ds.frame_len));
    w.u32(static_cast<std::uint32_t>(ds.target));
    w.u32(ds.meta.empty() ? 0u : kFlagMeta);
    w.u32(0);
    w.u64(ds.n_train);
    w.u64(ds.n_val);
    w.u64(ds.master_seed);
    w.pad_to(kDatasetHeaderSize);

    w.buffer().reserve(kDatasetHeaderSize + ds.iq.size() * 4 + ds.size() * (4 + kMetaRecordSize) + 4);
    w.f32_array(ds.iq);
    w.f32_array(ds.labels);
    for (const auto& m : ds.meta) {
        w.f32(m.alpha);
        w.f32(m.theta_deg);
        w.f32(m.freq_offset);
        w.f32(m.sps);
        w.f32(m.snr_db);
        w.u32(m.family);
        w.u32(m.order);
        w.u64(m.seed);
    }
    io::seal_with_crc(w);
    return std::move(w.buffer());
}

Dataset deserialize_dataset(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kDatasetHeaderSize)
        fail(ErrorCode::Truncated, "dataset file shorter than its 64-byte header");
    io::ByteReader r(bytes);
    const auto magic = r.bytes(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        fail(ErrorCode::Format, "not a dataset file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kDatasetFormatVersion)
        fail(ErrorCode::Version, "unsupported dataset format version " + std::to_string(version));

    Dataset ds;
    const std::uint64_t count = r.u64();
    ds.frame_len = r.u32();
    const std::uint32_t target = r.u32();
    const std::uint32_t flags = r.u32();
    r.u32();
    ds.n_train = r.u64();
    ds.n_val = r.u64();
    ds.master_seed = r.u64();
    if (target > 1)
        fail(ErrorCode::Format, "unknown target code " + std::to_string(target));
    ds.target = static_cast<Target>(target);
    if (ds.n_train + ds.n_val > count)
        fail(ErrorCode::Format, "split sizes exceed frame count");

    const bool has_meta = (flags & kFlagMeta) != 0;
    const std::size_t expected =
        kDatasetHeaderSize + count * ds.frame_len * 8 + count * 4 + (has_meta ? count * kMetaRecordSize : 0) + 4;
    if (bytes.size() < expected)
        fail(ErrorCode::Truncated, "dataset file truncated: " + std::to_string(bytes.size()) + " of " +
                                       std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        fail(ErrorCode::Format, "dataset file has trailing bytes");
    io::verify_crc(bytes, kDatasetHeaderSize);

    r.seek(kDatasetHeaderSize);
    ds.iq.resize(count * ds.frame_len * 2);
    ds.labels.resize(count);
    r.f32_array(ds.iq);
    r.f32_array(ds.labels);
    if (has_meta) {
        ds.meta.resize(count);
        for (auto& m : ds.meta) {
            m.alpha = r.f32();
            m.theta_deg = r.f32();
            m.freq_offset = r.f32();
            m.sps = r.f32();
            m.snr_db = r.f32();
            m.family = r.u32();
            m.order = r.u32();
            m.seed = r.u64();
        }
    }
    return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds, const std::optional<json>& sidecar)
{
    const auto bytes = serialize_dataset(ds);
    io::write_file_atomic(path, bytes);
    if (sidecar) {
        auto side = path;
        side.replace_extension(".json");
        io::write_text_atomic(side, sidecar->dump(2) + "\n");
    }
}

Dataset load_dataset(const std::filesystem::path& path) { return deserialize_dataset(io::read_file(path)); }

std::uint32_t payload_crc(const Dataset& ds)
{
    io::ByteWriter w;
    w.f32_array(ds.iq);
    return io::crc32(w.buffer());
}

}  // namespace rfsei
