#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rfsei/cli.hpp"
#include "rfsei/dataset.hpp"
#include "rfsei/training.hpp"

using namespace rfsei;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir()
{
    static const fs::path dir = [] {
        fs::path d = fs::path(RFSEI_TEST_TMP) / "cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_json(const std::string& name, const json& j)
{
    const auto p = work_dir() / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

int run(const std::vector<std::string>& args) { return cli::run(args); }

json dataset_spec()
{
    return {{"family", "PSK"},   {"orders", {4}},         {"target", "gain"},      {"n_train", 96},
            {"n_val", 32},       {"n_test", 0},           {"frame_len", 512},      {"alpha", {0.0, 0.3}},
            {"theta_deg", {0, 5}}, {"freq_offset", {0, 0}}, {"sps", {2.0, 2.0}},  {"snr_db", {20, 35}},
            {"master_seed", 4}};
}

json network_file()
{
    json net = {{"input", {1, 2, 512}},
                {"layers",
                 {{{"kind", "conv2d"}, {"filters", 2}, {"kernel", {1, 8}}, {"activation", "relu"}},
                  {{"kind", "conv2d"}, {"filters", 2}, {"kernel", {2, 4}}, {"activation", "relu"}},
                  {{"kind", "maxpool"}, {"size", {1, 2}}},
                  {{"kind", "flatten"}},
                  {{"kind", "dense"}, {"units", 8}, {"activation", "relu"}},
                  {{"kind", "dense"}, {"units", 1}, {"activation", "linear"}}}},
                {"output_scale", 1.0}};
    return {{"network", net}, {"train", {{"learning_rate", 1e-3}, {"batch_size", 32}, {"max_epochs", 2}, {"seed", 3}}}};
}

/// Shared artifacts, built once in order.
struct Pipeline {
    fs::path train_ds, grid_ds, ckpt;

    static const Pipeline& get()
    {
        static const Pipeline p = [] {
            Pipeline q;
            q.train_ds = work_dir() / "train.rfpd";
            q.grid_ds = work_dir() / "grid.rfpd";
            q.ckpt = work_dir() / "model.rfpm";
            const auto spec = write_json("spec.json", dataset_spec());
            REQUIRE(run({"generate", spec.string(), "-o", q.train_ds.string()}) == 0);
            const auto grid = write_json("grid.json", {{"start", 0.05},
                                                       {"stop", 0.25},
                                                       {"step", 0.1},
                                                       {"frames_per_value", 40},
                                                       {"snr_values", {20, 30}}});
            REQUIRE(run({"generate", spec.string(), "--grid", grid.string(), "-o", q.grid_ds.string()}) == 0);
            const auto net = write_json("net.json", network_file());
            REQUIRE(run({"train", q.train_ds.string(), "-n", net.string(), "-o", q.ckpt.string()}) == 0);
            return q;
        }();
        return p;
    }
};

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("generate writes dataset, sidecar and manifest; reruns are identical")
    {
        const auto& p = Pipeline::get();
        CHECK(fs::exists(p.train_ds));
        CHECK(fs::exists(work_dir() / "train.json"));
        const auto man = json::parse(slurp(work_dir() / "train.rfpd.manifest.json"));
        CHECK(man["command"] == "generate");
        CHECK(man["seeds"]["master_seed"] == 4);
        CHECK(man.contains("wall_clock_seconds"));
        CHECK(man.contains("tool_version"));

        const auto again = work_dir() / "train_again.rfpd";
        REQUIRE(run({"generate", (work_dir() / "spec.json").string(), "-o", again.string()}) == 0);
        CHECK(payload_crc(load_dataset(again)) == payload_crc(load_dataset(p.train_ds)));
        CHECK(slurp(again) == slurp(p.train_ds));

        const auto grid = load_dataset(p.grid_ds);
        CHECK(grid.size() == 3 * 40 * 2);
    }

    TEST_CASE("invalid ranges and usage errors exit with the configuration code")
    {
        auto bad = dataset_spec();
        bad["alpha"] = {-2.0, 0.3};
        const auto spec = write_json("bad_spec.json", bad);
        CHECK(run({"generate", spec.string(), "-o", (work_dir() / "bad.rfpd").string()}) == cli::kExitConfig);
        CHECK_FALSE(fs::exists(work_dir() / "bad.rfpd"));
        CHECK(run({"frobnicate"}) == cli::kExitConfig);
        CHECK(run({"generate"}) == cli::kExitConfig);
        CHECK(run({"generate", (work_dir() / "nope.json").string(), "-o", "x.rfpd"}) == cli::kExitIo);
    }

    TEST_CASE("train writes checkpoint, loss history and manifest, and resumes")
    {
        const auto& p = Pipeline::get();
        const auto m = load_checkpoint(p.ckpt);
        CHECK(m.history.size() == 2);
        CHECK(m.finished);
        CHECK(first_line(fs::path(p.ckpt.string() + ".loss.csv")) == "epoch,train_loss,val_loss,learning_rate,seconds");
        const auto man = json::parse(slurp(p.ckpt.string() + ".manifest.json"));
        CHECK(man["command"] == "train");
        CHECK(man["seeds"]["train_seed"] == 3);

        const auto copy = work_dir() / "resume.rfpm";
        fs::copy_file(p.ckpt, copy, fs::copy_options::overwrite_existing);
        const auto net = (work_dir() / "net.json").string();
        REQUIRE(run({"train", p.train_ds.string(), "-n", net, "-o", copy.string(), "--resume", "--epochs", "3"}) == 0);
        const auto r = load_checkpoint(copy);
        CHECK(r.history.size() == 3);
        CHECK(r.history[0] == m.history[0]);

        // A different dataset must not be resumed onto.
        const auto other = work_dir() / "other.rfpd";
        REQUIRE(run({"generate", (work_dir() / "spec.json").string(), "--seed", "99", "-o", other.string()}) == 0);
        CHECK(run({"train", other.string(), "-n", net, "-o", copy.string(), "--resume", "--epochs", "4"}) ==
              cli::kExitConfig);
    }

    TEST_CASE("evaluate writes the documented reports deterministically")
    {
        const auto& p = Pipeline::get();
        const auto out1 = work_dir() / "eval1", out2 = work_dir() / "eval2";
        REQUIRE(run({"evaluate", p.ckpt.string(), p.grid_ds.string(), "-o", out1.string()}) == 0);
        REQUIRE(run({"evaluate", p.ckpt.string(), p.grid_ds.string(), "-o", out2.string(), "--threads", "2"}) == 0);
        CHECK(first_line(out1 / "bias_curve.csv") == "truth,bias,sample_variance,snr_db");
        CHECK(first_line(out1 / "snr_sweep.csv") == "snr_db,mean_err,std_err,n");
        CHECK(first_line(out1 / "scatter.csv") == "truth,estimate,snr_db");
        CHECK(fs::exists(out1 / "summary.json"));
        CHECK(fs::exists(out1 / "manifest.json"));
        for (const char* f : {"bias_curve.csv", "snr_sweep.csv", "scatter.csv", "summary.json"})
            CHECK(slurp(out1 / f) == slurp(out2 / f));

        CHECK(run({"evaluate", (work_dir() / "missing.rfpm").string(), p.grid_ds.string(), "-o",
                   (work_dir() / "eval3").string()}) == cli::kExitConfig);
    }

    TEST_CASE("fit-decision emits the GoF table and decision models")
    {
        const auto& p = Pipeline::get();
        const auto out = work_dir() / "fit";
        REQUIRE(run({"fit-decision", p.ckpt.string(), p.grid_ds.string(), "-o", out.string(), "--targets",
                     "0.1,0.2"}) == 0);
        CHECK(first_line(out / "gof_table.csv") == "snr_db,mean_p_value,accepted,n_fits,n_degenerate");
        CHECK(first_line(out / "separation_vs_snr.csv") == "snr_db,target_err,min_separation");
        const auto dm = json::parse(slurp(out / "decision_model.json"));
        CHECK(dm["target"] == "gain");
        CHECK(dm.contains("models_by_snr"));
        CHECK(dm.contains("degenerate_fits"));
        CHECK(run({"fit-decision", p.ckpt.string(), p.grid_ds.string(), "-o", out.string(), "--significance", "2"}) ==
              cli::kExitConfig);
    }

    TEST_CASE("sei runs a scenario file with checkpoint arms")
    {
        const auto& p = Pipeline::get();
        auto sc = json::parse(R"({"snr_db": [20], "k_values": [1, 3], "trials_per_snr": 50,
                                  "calibration_captures": 30, "frame_len": 512})");
        sc["arms"] = {{"narrow", p.ckpt.filename().string()}};
        const auto file = write_json("scenario.json", sc);
        const auto out = work_dir() / "sei";
        REQUIRE(run({"sei", file.string(), "-o", out.string()}) == 0);
        CHECK(first_line(out / "accuracy_vs_snr.csv") == "snr_db,k_captures,accuracy,n_trials,ci_low,ci_high,arm");
        const auto man = json::parse(slurp(out / "manifest.json"));
        CHECK(man["seeds"]["scenario_seed"] == 2024);
        CHECK(man["config"]["emitters"].size() == 5);

        REQUIRE(run({"sei", file.string(), "-o", (work_dir() / "sei_k").string(), "-k", "2", "--trials", "20"}) == 0);
        CHECK(slurp(work_dir() / "sei_k" / "accuracy_vs_snr.csv").find(",2,") != std::string::npos);

        sc["arms"] = {{"narrow", "does_not_exist.rfpm"}};
        const auto missing = write_json("scenario_missing.json", sc);
        CHECK(run({"sei", missing.string(), "-o", out.string()}) == cli::kExitConfig);
    }

    TEST_CASE("report collects result directories")
    {
        const auto& p = Pipeline::get();
        const auto ev = work_dir() / "eval_r";
        REQUIRE(run({"evaluate", p.ckpt.string(), p.grid_ds.string(), "-o", ev.string()}) == 0);
        const auto out = work_dir() / "report";
        REQUIRE(run({"report", ev.string(), "--input-size", "512=" + ev.string(), "-o", out.string()}) == 0);
        CHECK(fs::exists(out / "report.md"));
        CHECK(fs::exists(out / "report.json"));
        CHECK(first_line(out / "input_size_study.csv") == "frame_len,snr_db,mean_abs_bias,mean_sample_variance");
        CHECK(run({"report", (work_dir() / "nowhere").string(), "-o", out.string()}) == cli::kExitIo);
    }

    TEST_CASE("corrupted inputs exit with the I/O code")
    {
        const auto& p = Pipeline::get();
        auto bytes = slurp(p.train_ds);
        bytes[200] ^= 0x7f;
        const auto bad = work_dir() / "corrupt.rfpd";
        std::ofstream(bad, std::ios::binary) << bytes;
        CHECK(run({"train", bad.string(), "-o", (work_dir() / "c.rfpm").string()}) == cli::kExitIo);

        auto ck = slurp(p.ckpt);
        ck[ck.size() - 9] ^= 0x01;
        const auto bad_ck = work_dir() / "corrupt.rfpm";
        std::ofstream(bad_ck, std::ios::binary) << ck;
        CHECK(run({"evaluate", bad_ck.string(), p.grid_ds.string(), "-o", (work_dir() / "e").string()}) ==
              cli::kExitIo);
    }

    TEST_CASE("numeric failures exit with the numeric code")
    {
        const auto& p = Pipeline::get();
        auto cfg = network_file();
        cfg["train"]["learning_rate"] = 1e12;
        cfg["train"]["max_epochs"] = 3;
        const auto net = write_json("diverge.json", cfg);
        const int rc = run({"train", p.train_ds.string(), "-n", net.string(), "-o", (work_dir() / "d.rfpm").string()});
        CHECK(rc == cli::kExitNumeric);
    }
}
