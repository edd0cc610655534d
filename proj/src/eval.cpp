#include "rfsei/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rfsei/binary_io.hpp"
#include "rfsei/error.hpp"
#include "rfsei/rng.hpp"
#include "rfsei/stats.hpp"

namespace rfsei {

using nlohmann::json;

namespace {

void check_pair(std::span<const double> p, std::span<const double> m)
{
    require(!p.empty() && p.size() == m.size(), ErrorCode::Numeric, "metric needs equal, nonzero lengths");
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

}  // namespace

double nmse(std::span<const double> estimates, std::span<const double> truths)
{
    check_pair(estimates, truths);
    const double denom = stats::mean(estimates) * stats::mean(truths);
    require(denom > 0.0, ErrorCode::Numeric, "NMSE undefined: mean(P) * mean(M) is not positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double d = estimates[i] - truths[i];
        acc += d * d;
    }
    return acc / static_cast<double>(estimates.size()) / denom;
}

double mse(std::span<const double> estimates, std::span<const double> truths)
{
    check_pair(estimates, truths);
    double acc = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double d = estimates[i] - truths[i];
        acc += d * d;
    }
    return acc / static_cast<double>(estimates.size());
}

std::vector<double> cumulative_moving_average(std::span<const double> v)
{
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum += v[i];
        out[i] = sum / static_cast<double>(i + 1);
    }
    return out;
}

std::vector<BiasPoint> bias_curve(std::span<const double> estimates, std::span<const double> truths)
{
    check_pair(estimates, truths);
    std::map<double, std::vector<double>> groups;
    for (std::size_t i = 0; i < truths.size(); ++i)
        groups[truths[i]].push_back(estimates[i]);
    std::vector<BiasPoint> out;
    for (auto& [truth, est] : groups) {
        require(est.size() >= 2, ErrorCode::Numeric, "bias curve needs at least two estimates per grid value");
        BiasPoint p;
        p.truth = truth;
        p.n = est.size();
        p.cma = cumulative_moving_average(est);
        p.bias = stats::mean(est) - truth;
        p.sample_variance = stats::sample_variance(est);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<SnrStat> error_by_snr(std::span<const double> estimates, std::span<const double> truths,
                                  std::span<const double> snrs)
{
    check_pair(estimates, truths);
    require(snrs.size() == estimates.size(), ErrorCode::Numeric, "one SNR per estimate required");
    std::map<double, std::vector<double>> groups;
    for (std::size_t i = 0; i < estimates.size(); ++i)
        groups[snrs[i]].push_back(estimates[i] - truths[i]);
    std::vector<SnrStat> out;
    for (const auto& [snr, err] : groups) {
        SnrStat s;
        s.snr_db = snr;
        s.n = err.size();
        s.mean_err = stats::mean(err);
        s.std_err = err.size() >= 2 ? std::sqrt(stats::sample_variance(err)) : 0.0;
        out.push_back(s);
    }
    return out;
}

std::vector<SnrStat> snr_sweep(const Estimator& est, const DatasetSpec& spec, std::span<const double> snr_list,
                               std::size_t frames_per_snr, unsigned threads)
{
    require(frames_per_snr >= 2, ErrorCode::Config, "snr sweep needs at least two frames per SNR");
    std::vector<SnrStat> out;
    for (std::size_t k = 0; k < snr_list.size(); ++k) {
        DatasetSpec s = spec;
        s.target = est.target();
        s.snr_db = {snr_list[k], snr_list[k]};
        s.n_train = 0;
        s.n_val = 0;
        s.n_test = frames_per_snr;
        s.master_seed = derive_seed(spec.master_seed, 0x5a0 + k);
        const auto ds = build_dataset(s, threads);
        const auto e = est.estimate(block_of(ds, 0, ds.size()));
        std::vector<double> truths(ds.labels.begin(), ds.labels.end());
        std::vector<double> snrs(ds.size(), snr_list[k]);
        auto st = error_by_snr(e, truths, snrs);
        out.push_back(st.front());
    }
    return out;
}

double GridEvaluation::pearson() const { return stats::pearson(truths, estimates); }

double GridEvaluation::pearson_at(double snr_db) const
{
    std::vector<double> t, e;
    for (std::size_t i = 0; i < snrs.size(); ++i)
        if (snrs[i] == snr_db) {
            t.push_back(truths[i]);
            e.push_back(estimates[i]);
        }
    require(t.size() >= 2, ErrorCode::Config, "no grid frames at SNR " + fmt(snr_db));
    return stats::pearson(t, e);
}

double GridEvaluation::mean_sample_variance(double snr_db) const
{
    const auto it = bias_by_snr.find(snr_db);
    require(it != bias_by_snr.end(), ErrorCode::Config, "no grid frames at SNR " + fmt(snr_db));
    double acc = 0.0;
    for (const auto& p : it->second)
        acc += p.sample_variance;
    return acc / static_cast<double>(it->second.size());
}

double GridEvaluation::mean_abs_bias(double snr_db) const
{
    const auto it = bias_by_snr.find(snr_db);
    require(it != bias_by_snr.end(), ErrorCode::Config, "no grid frames at SNR " + fmt(snr_db));
    double acc = 0.0;
    for (const auto& p : it->second)
        acc += std::abs(p.bias);
    return acc / static_cast<double>(it->second.size());
}

GridEvaluation evaluate_grid(const Estimator& est, const Dataset& grid)
{
    require(grid.target == est.target(), ErrorCode::Config, "grid target does not match the estimator");
    require(grid.meta.size() == grid.size(), ErrorCode::Config, "grid dataset lacks per-frame metadata");
    GridEvaluation g;
    g.estimates = est.estimate(block_of(grid, 0, grid.size()));
    g.truths.assign(grid.labels.begin(), grid.labels.end());
    g.snrs.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        g.snrs[i] = grid.meta[i].snr_db;

    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_snr;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto& [e, t] = by_snr[g.snrs[i]];
        e.push_back(g.estimates[i]);
        t.push_back(g.truths[i]);
    }
    for (const auto& [snr, et] : by_snr)
        g.bias_by_snr[snr] = bias_curve(et.first, et.second);
    return g;
}

json EvalReport::summary_json() const
{
    json snr = json::array();
    for (const auto& s : snr_stats)
        snr.push_back({{"snr_db", s.snr_db}, {"mean_err", s.mean_err}, {"std_err", s.std_err}, {"n", s.n}});
    json per_snr = json::array();
    for (const auto& [s, pts] : grid.bias_by_snr)
        per_snr.push_back({{"snr_db", s},
                           {"mean_abs_bias", grid.mean_abs_bias(s)},
                           {"mean_sample_variance", grid.mean_sample_variance(s)},
                           {"pearson_r", grid.pearson_at(s)}});
    json j{{"mse", mse},
           {"pearson_r", pearson_r},
           {"frames", grid.estimates.size()},
           {"snr_stats", snr},
           {"grid_by_snr", per_snr},
           {"metadata", metadata}};
    j["nmse"] = nmse ? json(*nmse) : json(nullptr);
    if (!nmse_note.empty())
        j["nmse_note"] = nmse_note;
    return j;
}

EvalReport make_report(const Estimator& est, const Dataset& grid, json metadata)
{
    EvalReport r;
    r.grid = evaluate_grid(est, grid);
    r.mse = mse(r.grid.estimates, r.grid.truths);
    r.pearson_r = r.grid.pearson();
    try {
        r.nmse = nmse(r.grid.estimates, r.grid.truths);
    } catch (const Error& e) {
        r.nmse_note = std::string(e.what()) + "; mse reported instead";
    }
    r.snr_stats = error_by_snr(r.grid.estimates, r.grid.truths, r.grid.snrs);
    r.metadata = std::move(metadata);
    return r;
}

void write_report(const std::filesystem::path& dir, const EvalReport& report)
{
    std::ostringstream bias;
    bias << "truth,bias,sample_variance,snr_db\n";
    for (const auto& [snr, pts] : report.grid.bias_by_snr)
        for (const auto& p : pts)
            bias << fmt(p.truth) << ',' << fmt(p.bias) << ',' << fmt(p.sample_variance) << ',' << fmt(snr) << '\n';
    io::write_text_atomic(dir / "bias_curve.csv", bias.str());

    std::ostringstream sweep;
    sweep << "snr_db,mean_err,std_err,n\n";
    for (const auto& s : report.snr_stats)
        sweep << fmt(s.snr_db) << ',' << fmt(s.mean_err) << ',' << fmt(s.std_err) << ',' << s.n << '\n';
    io::write_text_atomic(dir / "snr_sweep.csv", sweep.str());

    std::ostringstream scatter;
    scatter << "truth,estimate,snr_db\n";
    for (std::size_t i = 0; i < report.grid.estimates.size(); ++i)
        scatter << fmt(report.grid.truths[i]) << ',' << fmt(report.grid.estimates[i]) << ','
                << fmt(report.grid.snrs[i]) << '\n';
    io::write_text_atomic(dir / "scatter.csv", scatter.str());

    io::write_text_atomic(dir / "summary.json", report.summary_json().dump(2) + "\n");
}

std::vector<InputSizeRow> input_size_study(const std::vector<std::pair<std::size_t, const GridEvaluation*>>& evals)
{
    std::vector<InputSizeRow> rows;
    for (const auto& [len, g] : evals) {
        require(g != nullptr, ErrorCode::Config, "missing grid evaluation");
        for (const auto& [snr, pts] : g->bias_by_snr)
            rows.push_back({len, snr, g->mean_abs_bias(snr), g->mean_sample_variance(snr)});
    }
    return rows;
}

std::string input_size_csv(std::span<const InputSizeRow> rows)
{
    std::ostringstream os;
    os << "frame_len,snr_db,mean_abs_bias,mean_sample_variance\n";
    for (const auto& r : rows)
        os << r.frame_len << ',' << fmt(r.snr_db) << ',' << fmt(r.mean_abs_bias) << ',' << fmt(r.mean_sample_variance)
           << '\n';
    return os.str();
}

}  // namespace rfsei
