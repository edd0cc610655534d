#include "rfsei/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfsei/binary_io.hpp"
#include "rfsei/dataset.hpp"
#include "rfsei/decision.hpp"
#include "rfsei/error.hpp"
#include "rfsei/estimator.hpp"
#include "rfsei/eval.hpp"
#include "rfsei/sei.hpp"
#include "rfsei/simd/kernels.hpp"
#include "rfsei/stats.hpp"
#include "rfsei/training.hpp"

namespace rfsei::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    unsigned threads = 1;
    bool deterministic = false;

    unsigned effective_threads() const { return deterministic ? 1u : threads; }
};

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Shape:
    case ErrorCode::Routing: return kExitConfig;
    case ErrorCode::Io:
    case ErrorCode::Format:
    case ErrorCode::Version:
    case ErrorCode::Truncated:
    case ErrorCode::Checksum: return kExitIo;
    case ErrorCode::Numeric:
    case ErrorCode::Degenerate: return kExitNumeric;
    case ErrorCode::Internal: return kExitFailure;
    }
    return kExitFailure;
}

json read_json(const fs::path& path)
{
    if (!fs::exists(path))
        fail(ErrorCode::Io, "file not found: " + path.string());
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, path.string() + ": " + e.what());
    }
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

std::string utc_now()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Collects what a command did and writes it beside its outputs.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

    json config = json::object();
    json seeds = json::object();
    json inputs = json::object();
    json outputs = json::object();

    void write(const fs::path& path, const Common& common) const
    {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const json j{{"command", command_},
                     {"tool_version", kToolVersion},
                     {"config", config},
                     {"seeds", seeds},
                     {"inputs", inputs},
                     {"outputs", outputs},
                     {"threads", common.effective_threads()},
                     {"deterministic", common.deterministic},
                     {"simd", simd::to_string(simd::active_isa())},
                     {"started_utc", started_},
                     {"wall_clock_seconds", secs}};
        io::write_text_atomic(path, j.dump(2) + "\n");
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    std::string started_ = utc_now();
};

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
    app->add_flag("--deterministic", c.deterministic, "Single-threaded, bit-reproducible numerics");
}

std::string loss_history_csv(const NetworkModel& m)
{
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,learning_rate,seconds\n";
    for (const auto& h : m.history)
        os << h.epoch << ',' << fmt(h.train_loss) << ',' << fmt(h.val_loss) << ',' << fmt(h.learning_rate) << ','
           << fmt(h.seconds) << '\n';
    return os.str();
}

NetworkModel load_model_checked(const fs::path& path)
{
    if (!fs::exists(path))
        fail(ErrorCode::Config, "checkpoint not found: " + path.string());
    return load_checkpoint(path);
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string spec;
    std::string out;
    std::string grid;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_train, n_val, n_test, frame_len;
    Common common;
};

int cmd_generate(const GenerateArgs& a)
{
    Manifest man("generate");
    json file = read_json(a.spec);
    const json& spec_json = file.contains("dataset") ? file.at("dataset") : file;
    DatasetSpec spec = DatasetSpec::from_json(spec_json);
    if (a.seed)
        spec.master_seed = *a.seed;
    if (a.n_train)
        spec.n_train = *a.n_train;
    if (a.n_val)
        spec.n_val = *a.n_val;
    if (a.n_test)
        spec.n_test = *a.n_test;
    if (a.frame_len)
        spec.frame_len = *a.frame_len;

    std::optional<EvalGrid> grid;
    if (!a.grid.empty())
        grid = EvalGrid::from_json(read_json(a.grid));
    else if (file.contains("grid"))
        grid = EvalGrid::from_json(file.at("grid"));
    if (grid)
        grid->target = spec.target;
    spec.validate();

    fs::path out = a.out;
    if (out.empty()) {
        require(file.contains("output"), ErrorCode::Config, "no output path: pass --out or set \"output\"");
        out = file.at("output").get<std::string>();
    }

    const Dataset ds = grid ? build_eval_grid(spec, *grid, a.common.effective_threads())
                            : build_dataset(spec, a.common.effective_threads());
    json sidecar{{"dataset", spec.to_json()}, {"frames", ds.size()}};
    if (grid)
        sidecar["grid"] = grid->to_json();
    save_dataset(out, ds, sidecar);

    man.config = sidecar;
    man.seeds = {{"master_seed", spec.master_seed}};
    man.inputs = {{"spec", a.spec}};
    if (!a.grid.empty())
        man.inputs["grid"] = a.grid;
    fs::path side = out;
    side.replace_extension(".json");
    man.outputs = {{"dataset", out.string()}, {"sidecar", side.string()}, {"payload_crc32", payload_crc(ds)}};
    man.write(manifest_for_file(out), a.common);
    std::cout << "wrote " << ds.size() << " frames to " << out.string() << " (payload crc32 " << std::hex
              << payload_crc(ds) << std::dec << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string dataset;
    std::string network;
    std::string out;
    bool resume = false;
    std::optional<std::size_t> epochs, batch, search_trials;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    Common common;
};

int cmd_train(const TrainArgs& a)
{
    Manifest man("train");
    const Dataset ds = load_dataset(a.dataset);

    json file = a.network.empty() ? json::object() : read_json(a.network);
    NetworkConfig net_cfg;
    if (file.contains("network"))
        net_cfg = NetworkConfig::from_json(file.at("network"));
    else if (file.contains("layers"))
        net_cfg = NetworkConfig::from_json(file);
    else
        net_cfg = NetworkConfig::estimator(ds.frame_len, file.value("max_pool", false));
    TrainConfig tc = file.contains("train") ? TrainConfig::from_json(file.at("train")) : TrainConfig{};
    if (a.epochs)
        tc.max_epochs = *a.epochs;
    if (a.batch)
        tc.batch_size = *a.batch;
    if (a.lr)
        tc.learning_rate = *a.lr;
    if (a.seed)
        tc.seed = *a.seed;
    tc.threads = a.common.effective_threads();
    tc.validate();

    const fs::path out = a.out;
    const fs::path hist_path = fs::path(out.string() + ".loss.csv");
    json search_json;
    if (a.search_trials && *a.search_trials > 0) {
        const SearchSpace space =
            file.contains("search") ? SearchSpace::from_json(file.at("search")) : SearchSpace{};
        const auto results = random_search(ds, space, tc, *a.search_trials, tc.seed, net_cfg.output_scale);
        search_json = json::array();
        for (const auto& r : results)
            search_json.push_back({{"network", r.config.to_json()}, {"val_loss", r.val_loss}});
        net_cfg = results.front().config;
        std::cout << "search selected network with validation MSE " << results.front().val_loss << "\n";
    }

    NetworkModel model;
    bool resumed = false;
    if (a.resume && fs::exists(out)) {
        model = load_checkpoint(out);
        require(a.network.empty() || model.config() == net_cfg, ErrorCode::Config,
                "checkpoint network differs from the requested config; refusing to resume");
        require(model.dataset_crc == payload_crc(ds), ErrorCode::Config,
                "checkpoint was trained on a different dataset; refusing to resume");
        model.train_config.max_epochs = tc.max_epochs;
        model.train_config.threads = tc.threads;
        // A finished run is extended only if it stopped on the epoch budget, not on patience.
        const bool stopped_early = model.history.size() - model.best_epoch >= model.train_config.patience;
        if (model.finished && model.history.size() < tc.max_epochs && !stopped_early) {
            model.finished = false;
            model.best_params = model.net.parameters();
        }
        resumed = true;
    } else {
        model = NetworkModel(net_cfg, tc, ds.target);
        model.dataset_crc = payload_crc(ds);
    }

    train(model, ds, [&](const NetworkModel& m) {
        const auto& h = m.history.back();
        std::cout << "epoch " << h.epoch << " train_mse " << h.train_loss << " val_mse " << h.val_loss << " ("
                  << h.seconds << " s)\n"
                  << std::flush;
        save_checkpoint(out, m);
        io::write_text_atomic(hist_path, loss_history_csv(m));
    });
    save_checkpoint(out, model);
    io::write_text_atomic(hist_path, loss_history_csv(model));

    man.config = {{"network", model.config().to_json()}, {"train", model.train_config.to_json()}};
    if (!search_json.is_null())
        man.config["search_results"] = search_json;
    man.seeds = {{"train_seed", model.train_config.seed}, {"dataset_master_seed", ds.master_seed}};
    man.inputs = {{"dataset", a.dataset}, {"network", a.network}, {"resumed", resumed}};
    man.outputs = {{"checkpoint", out.string()},
                   {"loss_history", hist_path.string()},
                   {"best_epoch", model.best_epoch},
                   {"best_val_mse", model.best_val_loss}};
    man.write(manifest_for_file(out), a.common);
    std::cout << "best epoch " << model.best_epoch << " val_mse " << model.best_val_loss << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string checkpoint;
    std::string grid;
    std::string out;
    Common common;
};

int cmd_evaluate(const EvaluateArgs& a)
{
    Manifest man("evaluate");
    auto model = std::make_shared<const NetworkModel>(load_model_checked(a.checkpoint));
    const Dataset grid = load_dataset(a.grid);
    const NetworkEstimator est(model, a.common.effective_threads());
    const json meta{{"checkpoint", a.checkpoint}, {"grid", a.grid}, {"grid_master_seed", grid.master_seed}};
    const auto report = make_report(est, grid, meta);
    fs::create_directories(a.out);
    write_report(a.out, report);
    man.inputs = meta;
    man.outputs = {{"dir", a.out}, {"files", {"bias_curve.csv", "snr_sweep.csv", "scatter.csv", "summary.json"}}};
    man.write(fs::path(a.out) / "manifest.json", a.common);
    std::cout << "pearson_r " << report.pearson_r << " mse " << report.mse << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- fit-decision

struct FitDecisionArgs {
    std::string checkpoint;
    std::string grid;
    std::string out;
    double significance = 0.05;
    std::vector<double> targets = {0.05, 0.10, 0.20};
    Common common;
};

int cmd_fit_decision(const FitDecisionArgs& a)
{
    Manifest man("fit-decision");
    require(a.significance > 0.0 && a.significance < 1.0, ErrorCode::Config, "significance must lie in (0, 1)");
    auto model = std::make_shared<const NetworkModel>(load_model_checked(a.checkpoint));
    const Dataset grid = load_dataset(a.grid);
    const NetworkEstimator est(model, a.common.effective_threads());
    const auto ge = evaluate_grid(est, grid);

    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_snr;
    for (std::size_t i = 0; i < ge.estimates.size(); ++i) {
        auto& [e, t] = by_snr[ge.snrs[i]];
        e.push_back(ge.estimates[i]);
        t.push_back(ge.truths[i]);
    }

    std::ostringstream gof;
    gof << "snr_db,mean_p_value,accepted,n_fits,n_degenerate\n";
    std::ostringstream sep;
    sep << "snr_db,target_err,min_separation\n";
    json models = json::object();
    json degenerate = json::array();
    for (const auto& [snr, et] : by_snr) {
        std::map<double, std::vector<double>> groups;
        for (std::size_t i = 0; i < et.first.size(); ++i)
            groups[et.second[i]].push_back(et.first[i]);
        std::vector<GaussianFit> fits;
        std::size_t n_degenerate = 0;
        for (const auto& [value, e] : groups) {
            try {
                fits.push_back(fit_gaussian(e, value));
            } catch (const Error& ex) {
                if (ex.code() != ErrorCode::Degenerate && ex.code() != ErrorCode::Numeric)
                    throw;
                ++n_degenerate;
                degenerate.push_back({{"snr_db", snr}, {"value", value}, {"reason", ex.what()}});
            }
        }
        double p_sum = 0.0;
        for (const auto& f : fits)
            p_sum += f.gof_p_value;
        const double p_mean = fits.empty() ? 0.0 : p_sum / static_cast<double>(fits.size());
        gof << fmt(snr) << ',' << fmt(p_mean) << ',' << (p_mean >= a.significance ? "yes" : "no") << ','
            << fits.size() << ',' << n_degenerate << '\n';

        if (n_degenerate == 0 && fits.size() >= 2) {
            for (double t : a.targets) {
                const auto r = min_separation(fits, t);
                sep << fmt(snr) << ',' << fmt(t) << ',' << (r.achievable ? fmt(r.delta) : "not_achievable") << '\n';
            }
            try {
                models[fmt(snr)] = DecisionModel::build(fits, a.significance).to_json();
            } catch (const Error& ex) {
                if (ex.code() != ErrorCode::Degenerate)
                    throw;
                json fj = json::array();
                for (const auto& f : fits)
                    fj.push_back(f.to_json());
                models[fmt(snr)] = {{"fits", fj}, {"error", ex.what()}};
            }
        }
    }

    const fs::path dir = a.out;
    fs::create_directories(dir);
    io::write_text_atomic(dir / "gof_table.csv", gof.str());
    io::write_text_atomic(dir / "separation_vs_snr.csv", sep.str());
    const json dm{{"significance", a.significance},
                  {"target", to_string(model->target)},
                  {"models_by_snr", models},
                  {"degenerate_fits", degenerate}};
    io::write_text_atomic(dir / "decision_model.json", dm.dump(2) + "\n");
    man.config = {{"significance", a.significance}, {"targets", a.targets}};
    man.inputs = {{"checkpoint", a.checkpoint}, {"grid", a.grid}};
    man.outputs = {{"dir", dir.string()},
                   {"files", {"gof_table.csv", "separation_vs_snr.csv", "decision_model.json"}}};
    man.write(dir / "manifest.json", a.common);
    std::cout << gof.str();
    return kExitOk;
}

// ---------------------------------------------------------------- sei

struct SeiArgs {
    std::string scenario;
    std::string out;
    std::vector<std::size_t> k_values;
    std::optional<std::size_t> trials;
    Common common;
};

int cmd_sei(const SeiArgs& a)
{
    Manifest man("sei");
    const json file = read_json(a.scenario);
    Table2Scenario sc = Table2Scenario::from_json(file);
    if (!a.k_values.empty())
        sc.k_values = a.k_values;
    if (a.trials)
        sc.trials_per_snr = *a.trials;
    sc.validate();

    require(file.contains("arms") && file.at("arms").is_object() && !file.at("arms").empty(), ErrorCode::Config,
            "scenario needs an \"arms\" object mapping arm names to gain-estimator checkpoints");
    const fs::path base = fs::path(a.scenario).parent_path();
    std::map<std::string, std::shared_ptr<const Estimator>> arms;
    json arm_paths = json::object();
    for (const auto& [name, p] : file.at("arms").items()) {
        fs::path path = p.get<std::string>();
        if (path.is_relative() && !fs::exists(path))
            path = base / path;
        if (!fs::exists(path))
            fail(ErrorCode::Config, "checkpoint for arm '" + name + "' not found: " + path.string());
        auto model = std::make_shared<const NetworkModel>(load_checkpoint(path));
        require(model->config().input.w == sc.frame_len, ErrorCode::Config,
                "arm '" + name + "' expects " + std::to_string(model->config().input.w) + "-sample frames");
        arms[name] = std::make_shared<NetworkEstimator>(model, a.common.effective_threads());
        arm_paths[name] = path.string();
    }

    const auto rep = run_table2_scenario(sc, arms, a.common.effective_threads());
    const fs::path dir = a.out;
    fs::create_directories(dir);
    io::write_text_atomic(dir / "accuracy_vs_snr.csv", rep.accuracy_csv());
    if (!rep.separation.empty())
        io::write_text_atomic(dir / "separation_vs_snr.csv", rep.separation_csv());
    io::write_text_atomic(dir / "sei_report.json", rep.to_json().dump(2) + "\n");
    man.config = sc.to_json();
    man.seeds = {{"scenario_seed", sc.seed}};
    man.inputs = {{"scenario", a.scenario}, {"arms", arm_paths}};
    man.outputs = {{"dir", dir.string()}, {"files", {"accuracy_vs_snr.csv", "sei_report.json"}}};
    man.write(dir / "manifest.json", a.common);
    std::cout << rep.accuracy_csv();
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::vector<std::string> inputs;
    std::vector<std::string> input_sizes;
    std::string out;
    Common common;
};

std::string read_text(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int cmd_report(const ReportArgs& a)
{
    Manifest man("report");
    std::ostringstream md;
    json collected = json::object();
    md << "# Run report\n\n";
    for (const auto& dir_s : a.inputs) {
        const fs::path dir = dir_s;
        if (!fs::is_directory(dir))
            fail(ErrorCode::Io, "not a result directory: " + dir.string());
        md << "## " << dir.string() << "\n\n";
        json entry = json::object();
        if (fs::exists(dir / "summary.json")) {
            const json s = read_json(dir / "summary.json");
            entry["summary"] = s;
            md << "Pearson r: " << s.at("pearson_r").get<double>() << ", MSE: " << s.at("mse").get<double>() << "\n\n";
            md << "| SNR (dB) | mean abs bias | mean sample variance | r |\n|---|---|---|---|\n";
            for (const auto& row : s.at("grid_by_snr"))
                md << "| " << row.at("snr_db").get<double>() << " | " << row.at("mean_abs_bias").get<double>()
                   << " | " << row.at("mean_sample_variance").get<double>() << " | "
                   << row.at("pearson_r").get<double>() << " |\n";
            md << "\n";
        }
        for (const char* name : {"gof_table.csv", "separation_vs_snr.csv", "accuracy_vs_snr.csv"}) {
            if (!fs::exists(dir / name))
                continue;
            const std::string csv = read_text(dir / name);
            entry[name] = csv;
            md << "### " << name << "\n\n```\n" << csv << "```\n\n";
        }
        collected[dir.string()] = entry;
    }

    if (!a.input_sizes.empty()) {
        std::vector<std::pair<std::size_t, json>> sizes;
        for (const auto& spec : a.input_sizes) {
            const auto eq = spec.find('=');
            require(eq != std::string::npos, ErrorCode::Config, "--input-size expects LEN=DIR, got '" + spec + "'");
            const std::size_t len = std::stoul(spec.substr(0, eq));
            sizes.emplace_back(len, read_json(fs::path(spec.substr(eq + 1)) / "summary.json"));
        }
        std::ostringstream csv;
        csv << "frame_len,snr_db,mean_abs_bias,mean_sample_variance\n";
        for (const auto& [len, s] : sizes)
            for (const auto& row : s.at("grid_by_snr"))
                csv << len << ',' << fmt(row.at("snr_db").get<double>()) << ','
                    << fmt(row.at("mean_abs_bias").get<double>()) << ','
                    << fmt(row.at("mean_sample_variance").get<double>()) << '\n';
        md << "## Input size study\n\n```\n" << csv.str() << "```\n";
        collected["input_size_study"] = csv.str();
        fs::create_directories(a.out);
        io::write_text_atomic(fs::path(a.out) / "input_size_study.csv", csv.str());
    }

    const fs::path dir = a.out;
    fs::create_directories(dir);
    io::write_text_atomic(dir / "report.md", md.str());
    io::write_text_atomic(dir / "report.json", collected.dump(2) + "\n");
    man.inputs = {{"dirs", a.inputs}, {"input_sizes", a.input_sizes}};
    man.outputs = {{"dir", dir.string()}, {"files", {"report.md", "report.json"}}};
    man.write(dir / "manifest.json", a.common);
    std::cout << "wrote " << (dir / "report.md").string() << "\n";
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv)
{
    CLI::App app{"Specific emitter identification toolkit: IQ-imbalance datasets, estimators and decisions"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Build a dataset or evaluation grid from a spec file");
    g->add_option("spec", gen.spec, "Dataset spec JSON (optionally with \"grid\" and \"output\")")->required();
    g->add_option("-o,--out", gen.out, "Output .rfpd path");
    g->add_option("--grid", gen.grid, "Evaluation grid JSON; builds a grid dataset");
    g->add_option("--seed", gen.seed, "Override master_seed");
    g->add_option("--n-train", gen.n_train);
    g->add_option("--n-val", gen.n_val);
    g->add_option("--n-test", gen.n_test);
    g->add_option("--frame-len", gen.frame_len);
    add_common(g, gen.common);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train an estimator network");
    t->add_option("dataset", tr.dataset, "Training dataset (.rfpd)")->required();
    t->add_option("-n,--network", tr.network, "Network/training config JSON");
    t->add_option("-o,--out", tr.out, "Checkpoint path (.rfpm)")->required();
    t->add_flag("--resume", tr.resume, "Continue from an existing checkpoint at --out");
    t->add_option("--epochs", tr.epochs);
    t->add_option("--batch", tr.batch);
    t->add_option("--lr", tr.lr);
    t->add_option("--seed", tr.seed);
    t->add_option("--search-trials", tr.search_trials, "Random architecture search before training");
    add_common(t, tr.common);

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Bias, variance, SNR and scatter reports on a grid dataset");
    e->add_option("checkpoint", ev.checkpoint)->required();
    e->add_option("grid", ev.grid)->required();
    e->add_option("-o,--out", ev.out, "Output directory")->required();
    add_common(e, ev.common);

    FitDecisionArgs fd;
    auto* f = app.add_subcommand("fit-decision", "Gaussian fits, GoF table, decision models and separations");
    f->add_option("checkpoint", fd.checkpoint)->required();
    f->add_option("grid", fd.grid)->required();
    f->add_option("-o,--out", fd.out, "Output directory")->required();
    f->add_option("--significance", fd.significance)->capture_default_str();
    f->add_option("--targets", fd.targets, "Mis-ID targets for the separation table")->delimiter(',');
    add_common(f, fd.common);

    SeiArgs se;
    auto* s = app.add_subcommand("sei", "Run an emitter identification scenario");
    s->add_option("scenario", se.scenario, "Scenario JSON with emitters and estimator arms")->required();
    s->add_option("-o,--out", se.out, "Output directory")->required();
    s->add_option("-k,--k-values", se.k_values, "Captures per decision to sweep")->delimiter(',');
    s->add_option("--trials", se.trials, "Trials per SNR");
    add_common(s, se.common);

    ReportArgs rp;
    auto* r = app.add_subcommand("report", "Collect result directories into one report");
    r->add_option("inputs", rp.inputs, "Result directories");
    r->add_option("--input-size", rp.input_sizes, "LEN=DIR evaluate outputs for the input size study");
    r->add_option("-o,--out", rp.out, "Output directory")->required();
    add_common(r, rp.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        const int rc = app.exit(pe);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*g)
            return cmd_generate(gen);
        if (*t)
            return cmd_train(tr);
        if (*e)
            return cmd_evaluate(ev);
        if (*f)
            return cmd_fit_decision(fd);
        if (*s)
            return cmd_sei(se);
        if (*r)
            return cmd_report(rp);
    } catch (const Error& err) {
        std::cerr << "error (" << to_string(err.code()) << "): " << err.what() << "\n";
        return exit_code_for(err.code());
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error (io): " << err.what() << "\n";
        return kExitIo;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

int run(const std::vector<std::string>& args)
{
    std::vector<const char*> argv;
    argv.push_back("rfsei");
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rfsei::cli
