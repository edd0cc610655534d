#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "rfsei/binary_io.hpp"
#include "rfsei/dataset.hpp"
#include "rfsei/error.hpp"
#include "rfsei/rng.hpp"
#include "rfsei/stats.hpp"

using namespace rfsei;

namespace {

DatasetSpec small_spec()
{
    DatasetSpec s;
    s.n_train = 40;
    s.n_val = 10;
    s.n_test = 10;
    s.frame_len = 512;
    s.master_seed = 17;
    return s;
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Internal;
}

std::filesystem::path tmp_dir()
{
    std::filesystem::path p = RFSEI_TEST_TMP;
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_SUITE("dataset")
{
    TEST_CASE("degenerate alpha range gives zero labels")
    {
        auto s = small_spec();
        s.alpha = {0.0, 0.0};
        const auto ds = build_dataset(s);
        REQUIRE(ds.size() == 60);
        for (float l : ds.labels)
            CHECK(l == 0.0f);
    }

    TEST_CASE("labels are uniform over the configured range")
    {
        DatasetSpec s;
        s.master_seed = 5;
        std::vector<double> labels;
        // Labels depend only on the per-frame seed, so draw them without synthesizing.
        for (std::size_t i = 0; i < 10000; ++i) {
            ModulationScheme scheme;
            labels.push_back(draw_impairments(s, derive_seed(s.master_seed, i), scheme).alpha);
        }
        CHECK(std::abs(stats::mean(labels)) < 0.02);
        CHECK(*std::min_element(labels.begin(), labels.end()) >= -0.9);
        CHECK(*std::max_element(labels.begin(), labels.end()) <= 0.9);
        CHECK(stats::ks_uniform_pvalue(labels, -0.9, 0.9) > 0.01);

        s.target = Target::PhaseImbalance;
        labels.clear();
        for (std::size_t i = 0; i < 10000; ++i) {
            ModulationScheme scheme;
            labels.push_back(draw_impairments(s, derive_seed(9, i), scheme).theta_deg);
        }
        CHECK(stats::ks_uniform_pvalue(labels, -10.0, 10.0) > 0.01);
    }

    TEST_CASE("built labels match the stored ground truth")
    {
        auto s = small_spec();
        const auto ds = build_dataset(s);
        REQUIRE(ds.meta.size() == ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(ds.labels[i] == ds.meta[i].alpha);
            CHECK(s.alpha.contains(ds.meta[i].alpha));
            CHECK(s.snr_db.contains(ds.meta[i].snr_db));
            CHECK(std::find(s.orders.begin(), s.orders.end(), static_cast<int>(ds.meta[i].order)) != s.orders.end());
        }
        CHECK(ds.n_train == 40);
        CHECK(ds.n_val == 10);
        CHECK(ds.n_test() == 10);
    }

    TEST_CASE("rebuilds are byte-identical and thread-count independent")
    {
        const auto s = small_spec();
        const auto a = serialize_dataset(build_dataset(s, 1));
        const auto b = serialize_dataset(build_dataset(s, 1));
        const auto c = serialize_dataset(build_dataset(s, 3));
        CHECK(a == b);
        CHECK(a == c);
        auto s2 = s;
        s2.master_seed = 18;
        CHECK(serialize_dataset(build_dataset(s2)) != a);
    }

    TEST_CASE("frame seeds are pairwise disjoint across splits and grids")
    {
        DatasetSpec s = small_spec();
        s.n_train = 300;
        s.n_val = 50;
        s.n_test = 50;
        std::set<std::uint64_t> seen;
        for (std::size_t i = 0; i < s.n_frames(); ++i)
            CHECK(seen.insert(derive_seed(s.master_seed, i)).second);
        const auto ds = build_dataset(s);
        std::set<std::uint64_t> stored;
        for (const auto& m : ds.meta)
            stored.insert(m.seed);
        CHECK(stored.size() == s.n_frames());

        EvalGrid g;
        g.start = -0.1;
        g.stop = 0.1;
        g.step = 0.05;
        g.frames_per_value = 10;
        const auto grid = build_eval_grid(s, g);
        for (const auto& m : grid.meta)
            CHECK(stored.count(m.seed) == 0);
    }

    TEST_CASE("grid sizes")
    {
        EvalGrid gain;
        CHECK(gain.values().size() == 181);
        CHECK(gain.frame_count() == 181000);

        EvalGrid phase;
        phase.target = Target::PhaseImbalance;
        phase.start = -10.0;
        phase.stop = 10.0;
        phase.step = 0.1;
        CHECK(phase.frame_count() == 201000);

        EvalGrid desk;
        desk.step = 0.05;
        desk.frames_per_value = 200;
        CHECK(desk.values().size() == 37);
        CHECK(desk.frame_count() == 37 * 200);

        desk.snr_values = {0, 10, 20};
        CHECK(desk.frame_count() == 3 * 37 * 200);
    }

    TEST_CASE("grid frames sit at the exact offsets")
    {
        auto s = small_spec();
        EvalGrid g;
        g.start = -0.9;
        g.stop = 0.9;
        g.step = 0.3;
        g.frames_per_value = 4;
        g.snr_values = {5.0, 25.0};
        const auto ds = build_eval_grid(s, g, 2);
        REQUIRE(ds.size() == 7 * 4 * 2);
        const auto values = g.values();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double v = values[(i % 28) / 4];
            CHECK(ds.labels[i] == static_cast<float>(v));
            CHECK(ds.meta[i].alpha == static_cast<float>(v));
            CHECK(ds.meta[i].snr_db == (i < 28 ? 5.0f : 25.0f));
        }
    }

    TEST_CASE("grid outside the training range is rejected")
    {
        auto s = small_spec();
        s.alpha = {-0.5, 0.5};
        EvalGrid g;
        CHECK(code_of([&] { build_eval_grid(s, g); }) == ErrorCode::Config);
        g.start = -0.5;
        g.stop = 0.5;
        g.step = 0.3;
        CHECK(code_of([&] { g.validate(); }) == ErrorCode::Config);
        g.step = -0.1;
        CHECK(code_of([&] { g.validate(); }) == ErrorCode::Config);
    }

    TEST_CASE("inconsistent specs are configuration errors")
    {
        auto s = small_spec();
        s.alpha = {-1.0, 0.5};
        CHECK(code_of([&] { s.validate(); }) == ErrorCode::Config);
        s = small_spec();
        s.frame_len = 700;
        CHECK(code_of([&] { s.validate(); }) == ErrorCode::Config);
        s = small_spec();
        s.orders = {4};
        CHECK(code_of([&] { s.validate(); }) == ErrorCode::Config);
        s = small_spec();
        s.n_train = s.n_val = s.n_test = 0;
        CHECK(code_of([&] { s.validate(); }) == ErrorCode::Config);
        s = small_spec();
        s.sps = {0.5, 2.0};
        CHECK(code_of([&] { s.validate(); }) == ErrorCode::Config);
    }

    TEST_CASE("spec and grid JSON round trip")
    {
        auto s = small_spec();
        s.family = ModulationFamily::Psk;
        s.orders = {2, 8};
        s.target = Target::PhaseImbalance;
        s.theta_deg = {-2.0, 3.0};
        const auto back = DatasetSpec::from_json(s.to_json());
        CHECK(back.to_json() == s.to_json());
        CHECK(back.orders == s.orders);

        EvalGrid g;
        g.snr_values = {0, 5};
        CHECK(EvalGrid::from_json(g.to_json()).to_json() == g.to_json());
        CHECK(code_of([] { DatasetSpec::from_json(nlohmann::json::parse(R"({"alpha": 3})")); }) == ErrorCode::Config);
    }

    TEST_CASE("save and load round trip bit-exactly")
    {
        const auto ds = build_dataset(small_spec());
        const auto path = tmp_dir() / "roundtrip.rfpd";
        save_dataset(path, ds, small_spec().to_json());
        const auto back = load_dataset(path);
        CHECK(back == ds);
        CHECK(std::filesystem::exists(tmp_dir() / "roundtrip.json"));
        CHECK(payload_crc(back) == payload_crc(ds));

        Dataset bare = ds;
        bare.meta.clear();
        CHECK(deserialize_dataset(serialize_dataset(bare)) == bare);
    }

    TEST_CASE("corrupted files raise the designated errors")
    {
        const auto ds = build_dataset(small_spec());
        const auto bytes = serialize_dataset(ds);

        CHECK(code_of([] { deserialize_dataset({}); }) == ErrorCode::Truncated);

        auto flipped = bytes;
        flipped[kDatasetHeaderSize + 1001] ^= 0x10;
        CHECK(code_of([&] { deserialize_dataset(flipped); }) == ErrorCode::Checksum);

        auto magic = bytes;
        magic[0] = 'X';
        CHECK(code_of([&] { deserialize_dataset(magic); }) == ErrorCode::Format);

        auto version = bytes;
        version[4] = 9;
        CHECK(code_of([&] { deserialize_dataset(version); }) == ErrorCode::Version);

        const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 100);
        CHECK(code_of([&] { deserialize_dataset(cut); }) == ErrorCode::Truncated);

        auto longer = bytes;
        longer.push_back(0);
        CHECK(code_of([&] { deserialize_dataset(longer); }) == ErrorCode::Format);

        const auto empty = tmp_dir() / "empty.rfpd";
        std::ofstream(empty).close();
        CHECK(code_of([&] { load_dataset(empty); }) == ErrorCode::Truncated);
        CHECK(code_of([&] { load_dataset(tmp_dir() / "missing.rfpd"); }) == ErrorCode::Io);
    }
}
