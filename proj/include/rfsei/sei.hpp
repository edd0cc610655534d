#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsei/decision.hpp"
#include "rfsei/estimator.hpp"
#include "rfsei/signal_model.hpp"

namespace rfsei {

struct EmitterProfile {
    std::string id;
    double alpha = 0.0;
    double theta_deg = 0.0;
    ModulationScheme scheme{ModulationFamily::Psk, 4};

    void validate() const;
    nlohmann::json to_json() const;
    static EmitterProfile from_json(const nlohmann::json& j);
};

/// Produces a family label from raw IQ.
class ModulationClassifier {
public:
    virtual ~ModulationClassifier() = default;
    virtual ModulationFamily classify(const IqFrame& frame) const = 0;
};

/// Reads the label from the frame's ground truth.
class OracleClassifier final : public ModulationClassifier {
public:
    ModulationFamily classify(const IqFrame& frame) const override { return frame.scheme.family; }
};

enum class ClassifierMode { Oracle, Plugin };
enum class Aggregation { Mean, Vote };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& text);

struct SeiConfig {
    std::map<ModulationFamily, std::shared_ptr<const Estimator>> estimators;
    std::map<ModulationFamily, DecisionModel> decisions;
    std::size_t captures_per_decision = 1;
    Aggregation aggregation = Aggregation::Mean;
    ClassifierMode mode = ClassifierMode::Oracle;
    std::shared_ptr<const ModulationClassifier> classifier;  ///< required in Plugin mode

    void validate() const;
};

struct Identification {
    ModulationFamily family = ModulationFamily::Qam;
    std::vector<double> estimates;  ///< one per capture
    double aggregated_estimate = 0.0;
    std::size_t decision = 0;  ///< bin index into the family's DecisionModel fits
};

/// Interleaved float copy of complex frames, with their ground truth as metadata.
struct FrameBuffer {
    std::vector<float> iq;
    std::vector<FrameMeta> meta;
    std::size_t frame_len = 0;

    FrameBlock block() const { return {iq, frame_len, meta}; }
};

FrameBuffer to_buffer(std::span<const IqFrame> frames);

/// Routes the captures to the estimator of their family (given `label`, or the
/// configured classifier otherwise), aggregates and classifies. Unsupported families
/// raise ErrorCode::Routing.
Identification identify(std::span<const IqFrame> captures, std::optional<ModulationFamily> label,
                        const SeiConfig& config);

/// Aggregates point estimates and classifies them against `model`. Mean aggregation
/// uses the model for the mean of estimates.size() captures.
std::size_t decide(std::span<const double> estimates, const DecisionModel& model, Aggregation aggregation);

/// Evenly spaced offsets used for the separation view of a scenario.
struct SeparationGrid {
    double start = 0.1;
    double stop = 0.2;
    double step = 0.01;
    std::size_t frames_per_value = 200;
};

struct Table2Scenario {
    std::vector<EmitterProfile> emitters;
    std::vector<double> snr_db = {5, 10, 15, 20, 25, 30, 35};
    std::vector<std::size_t> k_values = {1, 10};
    std::size_t trials_per_snr = 2000;
    std::size_t calibration_captures = 400;  ///< per emitter and SNR, for the known-emitter fits
    std::size_t frame_len = 1024;
    double sps = 2.0;
    std::uint64_t seed = 2024;
    Aggregation aggregation = Aggregation::Mean;
    std::optional<SeparationGrid> separation;
    std::vector<double> separation_targets = {0.05, 0.10, 0.20};

    /// Five QPSK emitters with the reference gain and phase imbalances.
    static Table2Scenario reference();

    void validate() const;
    nlohmann::json to_json() const;
    static Table2Scenario from_json(const nlohmann::json& j);
};

struct AccuracyRow {
    std::string arm;
    double snr_db = 0.0;
    std::size_t k_captures = 0;
    double accuracy = 0.0;
    std::size_t n_trials = 0;
    double ci_low = 0.0;  ///< 95% Wilson interval
    double ci_high = 0.0;
};

struct SeparationRow {
    std::string arm;
    double snr_db = 0.0;
    double target_err = 0.0;
    bool achievable = false;
    double min_separation = 0.0;
};

struct ScenarioReport {
    std::vector<AccuracyRow> accuracy;
    std::vector<SeparationRow> separation;
    std::map<std::string, std::map<double, DecisionModel>> decisions;  ///< per arm and SNR

    double accuracy_of(const std::string& arm, double snr_db, std::size_t k) const;
    std::string accuracy_csv() const;
    std::string separation_csv() const;
    nlohmann::json to_json() const;
};

/// Known-emitter identification accuracy per SNR and K. Every arm sees identical
/// captures; K=1 uses the first capture of each K_max-capture trial.
ScenarioReport run_table2_scenario(const Table2Scenario& scenario,
                                   const std::map<std::string, std::shared_ptr<const Estimator>>& arms,
                                   unsigned threads = 1);

/// Same as run_table2_scenario with a wide-range and a narrow-range arm, adding the
/// separation view when the scenario has none.
ScenarioReport wide_vs_narrow_study(Table2Scenario scenario, std::shared_ptr<const Estimator> wide,
                                    std::shared_ptr<const Estimator> narrow, unsigned threads = 1);

/// Gaussian fit per distinct truth value (ascending), for grid-based decision models.
std::vector<GaussianFit> fit_by_value(std::span<const double> estimates, std::span<const double> truths);

/// Wilson score interval for k successes out of n at 95%.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n);

}  // namespace rfsei
