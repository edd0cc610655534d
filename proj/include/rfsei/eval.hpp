#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsei/dataset.hpp"
#include "rfsei/estimator.hpp"

namespace rfsei {

/// (1/N) sum (P_i - M_i)^2 / (mean(P) * mean(M)). Raises ErrorCode::Numeric when
/// mean(P) * mean(M) <= 0, where the normalization is meaningless.
double nmse(std::span<const double> estimates, std::span<const double> truths);

double mse(std::span<const double> estimates, std::span<const double> truths);

struct BiasPoint {
    double truth = 0.0;
    double bias = 0.0;
    double sample_variance = 0.0;
    std::size_t n = 0;
    std::vector<double> cma;  ///< cumulative moving average of the estimates
};

/// Groups estimates by exact truth value, ascending. Needs at least two estimates per value.
std::vector<BiasPoint> bias_curve(std::span<const double> estimates, std::span<const double> truths);

std::vector<double> cumulative_moving_average(std::span<const double> v);

struct SnrStat {
    double snr_db = 0.0;
    double mean_err = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
};

/// Error statistics of (estimate - truth) pooled per SNR value.
std::vector<SnrStat> error_by_snr(std::span<const double> estimates, std::span<const double> truths,
                                  std::span<const double> snrs);

/// Fresh frames with uniformly random offsets at each listed SNR (other impairments per `spec`).
std::vector<SnrStat> snr_sweep(const Estimator& est, const DatasetSpec& spec, std::span<const double> snr_list,
                               std::size_t frames_per_snr, unsigned threads = 1);

/// Grid-dataset evaluation, split by the SNR recorded in each frame's metadata.
struct GridEvaluation {
    std::vector<double> estimates;
    std::vector<double> truths;
    std::vector<double> snrs;  ///< NaN-free; equals the frame SNR
    std::map<double, std::vector<BiasPoint>> bias_by_snr;

    double pearson() const;
    /// Pearson over frames at one SNR.
    double pearson_at(double snr_db) const;
    double mean_sample_variance(double snr_db) const;
    double mean_abs_bias(double snr_db) const;
};

GridEvaluation evaluate_grid(const Estimator& est, const Dataset& grid);

struct EvalReport {
    std::optional<double> nmse;
    std::string nmse_note;
    double mse = 0.0;
    double pearson_r = 0.0;
    GridEvaluation grid;
    std::vector<SnrStat> snr_stats;
    nlohmann::json metadata;

    nlohmann::json summary_json() const;
};

EvalReport make_report(const Estimator& est, const Dataset& grid, nlohmann::json metadata = {});

/// Writes bias_curve.csv, snr_sweep.csv, scatter.csv and summary.json into `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

struct InputSizeRow {
    std::size_t frame_len = 0;
    double snr_db = 0.0;
    double mean_abs_bias = 0.0;
    double mean_sample_variance = 0.0;
};

/// One row per (input size, SNR) from grid evaluations of models with different frame lengths.
std::vector<InputSizeRow> input_size_study(const std::vector<std::pair<std::size_t, const GridEvaluation*>>& evals);

std::string input_size_csv(std::span<const InputSizeRow> rows);

}  // namespace rfsei
