#include "rfsei/sei.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rfsei/error.hpp"
#include "rfsei/parallel.hpp"
#include "rfsei/rng.hpp"

namespace rfsei {

using nlohmann::json;

namespace {

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

FrameMeta meta_of(const IqFrame& f)
{
    FrameMeta m;
    m.alpha = static_cast<float>(f.truth.alpha);
    m.theta_deg = static_cast<float>(f.truth.theta_deg);
    m.freq_offset = static_cast<float>(f.truth.freq_offset);
    m.sps = static_cast<float>(f.truth.sps);
    m.snr_db = static_cast<float>(f.truth.snr_db);
    m.family = static_cast<std::uint32_t>(f.scheme.family);
    m.order = static_cast<std::uint32_t>(f.scheme.order);
    m.seed = f.seed;
    return m;
}

/// Captures of one emitter at one SNR, seeded by (stream, index).
FrameBuffer make_captures(const EmitterProfile& e, double snr_db, std::size_t frame_len, double sps,
                          std::uint64_t stream, std::size_t count, unsigned threads)
{
    FrameBuffer buf;
    buf.frame_len = frame_len;
    buf.iq.resize(count * frame_len * 2);
    buf.meta.resize(count);
    ImpairmentParams p;
    p.alpha = e.alpha;
    p.theta_deg = e.theta_deg;
    p.freq_offset = 0.0;
    p.sps = sps;
    p.snr_db = snr_db;
    parallel_for(count, threads, [&](std::size_t i) {
        const auto f = synthesize_frame(e.scheme, p, frame_len, derive_seed(stream, i));
        float* dst = buf.iq.data() + i * frame_len * 2;
        for (std::size_t n = 0; n < frame_len; ++n) {
            dst[2 * n] = static_cast<float>(f.samples[n].real());
            dst[2 * n + 1] = static_cast<float>(f.samples[n].imag());
        }
        buf.meta[i] = meta_of(f);
    });
    return buf;
}

}  // namespace

void EmitterProfile::validate() const
{
    scheme.validate();
    require(std::abs(alpha) <= ImpairmentParams::kAlphaLimit, ErrorCode::Config, "emitter '" + id + "' alpha out of range");
    require(std::abs(theta_deg) <= ImpairmentParams::kThetaLimitDeg, ErrorCode::Config,
            "emitter '" + id + "' theta out of range");
}

json EmitterProfile::to_json() const
{
    return json{{"id", id}, {"alpha", alpha}, {"theta_deg", theta_deg}, {"modulation", scheme.name()}};
}

EmitterProfile EmitterProfile::from_json(const json& j)
{
    EmitterProfile e;
    try {
        e.id = j.at("id").get<std::string>();
        e.alpha = j.at("alpha").get<double>();
        e.theta_deg = j.value("theta_deg", 0.0);
        e.scheme = ModulationScheme::parse(j.value("modulation", std::string("QPSK")));
    } catch (const json::exception& ex) {
        fail(ErrorCode::Config, std::string("malformed emitter profile: ") + ex.what());
    }
    e.validate();
    return e;
}

std::string to_string(Aggregation a) { return a == Aggregation::Mean ? "mean" : "vote"; }

Aggregation parse_aggregation(const std::string& text)
{
    if (text == "mean")
        return Aggregation::Mean;
    if (text == "vote")
        return Aggregation::Vote;
    fail(ErrorCode::Config, "unknown aggregation '" + text + "' (expected mean or vote)");
}

void SeiConfig::validate() const
{
    require(captures_per_decision >= 1, ErrorCode::Config, "captures_per_decision must be >= 1");
    require(mode == ClassifierMode::Oracle || classifier != nullptr, ErrorCode::Config,
            "plugin classifier mode needs a classifier");
    for (const auto& [fam, est] : estimators) {
        require(est != nullptr, ErrorCode::Config, "null estimator for " + to_string(fam));
        require(est->target() == Target::GainImbalance, ErrorCode::Config,
                "identification uses gain-imbalance estimators only");
        require(decisions.count(fam) == 1, ErrorCode::Config, "no decision model for " + to_string(fam));
    }
    for (const auto& [fam, dm] : decisions)
        require(estimators.count(fam) == 1, ErrorCode::Config, "no estimator for " + to_string(fam));
}

FrameBuffer to_buffer(std::span<const IqFrame> frames)
{
    FrameBuffer buf;
    require(!frames.empty(), ErrorCode::Config, "no captures");
    buf.frame_len = frames.front().samples.size();
    for (const auto& f : frames) {
        require(f.samples.size() == buf.frame_len, ErrorCode::Shape, "captures differ in length");
        for (const auto& s : f.samples) {
            buf.iq.push_back(static_cast<float>(s.real()));
            buf.iq.push_back(static_cast<float>(s.imag()));
        }
        buf.meta.push_back(meta_of(f));
    }
    return buf;
}

std::size_t decide(std::span<const double> estimates, const DecisionModel& model, Aggregation aggregation)
{
    require(!estimates.empty(), ErrorCode::Config, "no estimates to aggregate");
    if (aggregation == Aggregation::Mean) {
        double s = 0.0;
        for (double e : estimates)
            s += e;
        const double mean = s / static_cast<double>(estimates.size());
        if (estimates.size() == 1)
            return classify(mean, model);
        return classify(mean, model.aggregated(estimates.size()));
    }
    std::vector<std::size_t> votes(model.fits.size(), 0);
    for (double e : estimates)
        ++votes[classify(e, model)];
    return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

Identification identify(std::span<const IqFrame> captures, std::optional<ModulationFamily> label,
                        const SeiConfig& config)
{
    config.validate();
    require(!captures.empty(), ErrorCode::Config, "identification needs at least one capture");
    Identification id;
    if (label) {
        id.family = *label;
    } else {
        if (config.mode == ClassifierMode::Plugin)
            id.family = config.classifier->classify(captures.front());
        else
            id.family = OracleClassifier().classify(captures.front());
    }
    const auto est = config.estimators.find(id.family);
    if (est == config.estimators.end())
        fail(ErrorCode::Routing, "no estimator configured for " + to_string(id.family) + " captures");
    const auto& model = config.decisions.at(id.family);

    const auto buf = to_buffer(captures);
    id.estimates = est->second->estimate(buf.block());
    double s = 0.0;
    for (double e : id.estimates)
        s += e;
    id.aggregated_estimate = s / static_cast<double>(id.estimates.size());
    id.decision = decide(id.estimates, model, config.aggregation);
    return id;
}

Table2Scenario Table2Scenario::reference()
{
    Table2Scenario s;
    const double alphas[] = {0.10, 0.13, 0.15, 0.17, 0.19};
    const double thetas[] = {3.0, 3.3, 3.6, 3.9, 4.2};
    for (int i = 0; i < 5; ++i)
        s.emitters.push_back({"E" + std::to_string(i + 1), alphas[i], thetas[i], {ModulationFamily::Psk, 4}});
    return s;
}

void Table2Scenario::validate() const
{
    require(emitters.size() >= 2, ErrorCode::Config, "scenario needs at least two emitters");
    for (const auto& e : emitters)
        e.validate();
    require(!snr_db.empty(), ErrorCode::Config, "scenario needs at least one SNR");
    for (double s : snr_db)
        require(s >= ImpairmentParams::kSnrMinDb && s <= ImpairmentParams::kSnrMaxDb, ErrorCode::Config,
                "scenario SNR out of range");
    require(!k_values.empty(), ErrorCode::Config, "scenario needs at least one K");
    for (auto k : k_values)
        require(k >= 1, ErrorCode::Config, "K must be >= 1");
    require(trials_per_snr > 0, ErrorCode::Config, "trials_per_snr must be positive");
    require(calibration_captures >= kMinFitSamples, ErrorCode::Config,
            "calibration_captures must be at least " + std::to_string(kMinFitSamples));
    require(frame_len == 512 || frame_len == 1024 || frame_len == 2048, ErrorCode::Config,
            "frame_len must be 512, 1024 or 2048");
    require(sps > 1.0, ErrorCode::Config, "sps must exceed 1");
    if (separation) {
        require(separation->step > 0.0 && separation->stop > separation->start, ErrorCode::Config,
                "separation grid needs start < stop and a positive step");
        require(separation->frames_per_value >= kMinFitSamples, ErrorCode::Config,
                "separation grid needs at least 30 frames per value");
    }
    for (double t : separation_targets)
        require(t > 0.0 && t < 0.5, ErrorCode::Config, "separation targets must lie in (0, 0.5)");
}

json Table2Scenario::to_json() const
{
    json em = json::array();
    for (const auto& e : emitters)
        em.push_back(e.to_json());
    json j{{"emitters", em},
           {"snr_db", snr_db},
           {"k_values", k_values},
           {"trials_per_snr", trials_per_snr},
           {"calibration_captures", calibration_captures},
           {"frame_len", frame_len},
           {"sps", sps},
           {"seed", seed},
           {"aggregation", to_string(aggregation)},
           {"separation_targets", separation_targets}};
    if (separation)
        j["separation_grid"] = {{"start", separation->start},
                                {"stop", separation->stop},
                                {"step", separation->step},
                                {"frames_per_value", separation->frames_per_value}};
    return j;
}

Table2Scenario Table2Scenario::from_json(const json& j)
{
    Table2Scenario s;
    try {
        if (j.contains("emitters")) {
            s.emitters.clear();
            for (const auto& e : j.at("emitters"))
                s.emitters.push_back(EmitterProfile::from_json(e));
        } else {
            s.emitters = reference().emitters;
        }
        s.snr_db = j.value("snr_db", s.snr_db);
        s.k_values = j.value("k_values", s.k_values);
        s.trials_per_snr = j.value("trials_per_snr", s.trials_per_snr);
        s.calibration_captures = j.value("calibration_captures", s.calibration_captures);
        s.frame_len = j.value("frame_len", s.frame_len);
        s.sps = j.value("sps", s.sps);
        s.seed = j.value("seed", s.seed);
        s.aggregation = parse_aggregation(j.value("aggregation", std::string("mean")));
        s.separation_targets = j.value("separation_targets", s.separation_targets);
        if (j.contains("separation_grid")) {
            const auto& g = j.at("separation_grid");
            SeparationGrid sg;
            sg.start = g.value("start", sg.start);
            sg.stop = g.value("stop", sg.stop);
            sg.step = g.value("step", sg.step);
            sg.frames_per_value = g.value("frames_per_value", sg.frames_per_value);
            s.separation = sg;
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed scenario: ") + e.what());
    }
    s.validate();
    return s;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n)
{
    require(n > 0, ErrorCode::Numeric, "Wilson interval needs n > 0");
    constexpr double z = 1.959963984540054;
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(k) / nd;
    const double denom = 1.0 + z * z / nd;
    const double centre = (p + z * z / (2.0 * nd)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z * z / (4.0 * nd * nd)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<GaussianFit> fit_by_value(std::span<const double> estimates, std::span<const double> truths)
{
    require(estimates.size() == truths.size(), ErrorCode::Shape, "one truth per estimate required");
    std::map<double, std::vector<double>> groups;
    for (std::size_t i = 0; i < truths.size(); ++i)
        groups[truths[i]].push_back(estimates[i]);
    std::vector<GaussianFit> fits;
    for (const auto& [v, e] : groups)
        fits.push_back(fit_gaussian(e, v));
    return fits;
}

double ScenarioReport::accuracy_of(const std::string& arm, double snr_db, std::size_t k) const
{
    for (const auto& r : accuracy)
        if (r.arm == arm && r.snr_db == snr_db && r.k_captures == k)
            return r.accuracy;
    fail(ErrorCode::Config, "no accuracy row for arm '" + arm + "' at SNR " + fmt(snr_db) + ", K=" + std::to_string(k));
}

std::string ScenarioReport::accuracy_csv() const
{
    std::ostringstream os;
    os << "snr_db,k_captures,accuracy,n_trials,ci_low,ci_high,arm\n";
    for (const auto& r : accuracy)
        os << fmt(r.snr_db) << ',' << r.k_captures << ',' << fmt(r.accuracy) << ',' << r.n_trials << ','
           << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ',' << r.arm << '\n';
    return os.str();
}

std::string ScenarioReport::separation_csv() const
{
    std::ostringstream os;
    os << "snr_db,target_err,min_separation,arm\n";
    for (const auto& r : separation)
        os << fmt(r.snr_db) << ',' << fmt(r.target_err) << ','
           << (r.achievable ? fmt(r.min_separation) : std::string("not_achievable")) << ',' << r.arm << '\n';
    return os.str();
}

json ScenarioReport::to_json() const
{
    json acc = json::array();
    for (const auto& r : accuracy)
        acc.push_back({{"arm", r.arm},
                       {"snr_db", r.snr_db},
                       {"k_captures", r.k_captures},
                       {"accuracy", r.accuracy},
                       {"n_trials", r.n_trials},
                       {"ci_low", r.ci_low},
                       {"ci_high", r.ci_high}});
    json sep = json::array();
    for (const auto& r : separation)
        sep.push_back({{"arm", r.arm},
                       {"snr_db", r.snr_db},
                       {"target_err", r.target_err},
                       {"achievable", r.achievable},
                       {"min_separation", r.achievable ? json(r.min_separation) : json(nullptr)}});
    json dec = json::object();
    for (const auto& [arm, by_snr] : decisions)
        for (const auto& [snr, dm] : by_snr)
            dec[arm][fmt(snr)] = dm.to_json();
    return json{{"accuracy", acc}, {"separation", sep}, {"decision_models", dec}};
}

ScenarioReport run_table2_scenario(const Table2Scenario& scenario,
                                   const std::map<std::string, std::shared_ptr<const Estimator>>& arms,
                                   unsigned threads)
{
    scenario.validate();
    require(!arms.empty(), ErrorCode::Config, "scenario needs at least one estimator");
    for (const auto& [name, est] : arms) {
        require(est != nullptr, ErrorCode::Config, "missing estimator for arm '" + name + "'");
        require(est->target() == Target::GainImbalance, ErrorCode::Config,
                "arm '" + name + "' is not a gain-imbalance estimator");
    }

    const std::size_t n_em = scenario.emitters.size();
    const std::size_t k_max = *std::max_element(scenario.k_values.begin(), scenario.k_values.end());
    ScenarioReport rep;

    for (std::size_t si = 0; si < scenario.snr_db.size(); ++si) {
        const double snr = scenario.snr_db[si];
        const std::uint64_t snr_seed = derive_seed(scenario.seed, si);

        // Calibration captures for the known-emitter fits.
        std::vector<FrameBuffer> calib;
        for (std::size_t e = 0; e < n_em; ++e)
            calib.push_back(make_captures(scenario.emitters[e], snr, scenario.frame_len, scenario.sps,
                                          derive_seed(derive_seed(snr_seed, 1), e), scenario.calibration_captures,
                                          threads));

        // Trial captures: trial t comes from emitter t mod n_em, with k_max captures each.
        std::vector<FrameBuffer> trials(n_em);
        std::vector<std::size_t> per_emitter(n_em, 0);
        for (std::size_t t = 0; t < scenario.trials_per_snr; ++t)
            ++per_emitter[t % n_em];
        for (std::size_t e = 0; e < n_em; ++e)
            trials[e] = make_captures(scenario.emitters[e], snr, scenario.frame_len, scenario.sps,
                                      derive_seed(derive_seed(snr_seed, 2), e), per_emitter[e] * k_max, threads);

        for (const auto& [name, est] : arms) {
            std::vector<GaussianFit> fits;
            for (std::size_t e = 0; e < n_em; ++e) {
                const auto cal = est->estimate(calib[e].block());
                fits.push_back(fit_gaussian(cal, scenario.emitters[e].alpha));
            }
            DecisionModel dm;
            bool usable = true;
            try {
                dm = DecisionModel::build(fits);
            } catch (const Error& ex) {
                if (ex.code() != ErrorCode::Degenerate)
                    throw;
                usable = false;
            }
            if (usable)
                rep.decisions[name][snr] = dm;

            std::vector<std::vector<double>> est_by_emitter(n_em);
            for (std::size_t e = 0; e < n_em; ++e)
                est_by_emitter[e] = est->estimate(trials[e].block());

            for (const std::size_t k : scenario.k_values) {
                std::size_t correct = 0;
                for (std::size_t e = 0; e < n_em && usable; ++e) {
                    const auto aggregated = dm.aggregated(k);
                    for (std::size_t t = 0; t < per_emitter[e]; ++t) {
                        const std::span<const double> caps(est_by_emitter[e].data() + t * k_max, k);
                        std::size_t dec = 0;
                        if (scenario.aggregation == Aggregation::Mean) {
                            double s = 0.0;
                            for (double v : caps)
                                s += v;
                            dec = classify(s / static_cast<double>(k), aggregated);
                        } else {
                            dec = decide(caps, dm, Aggregation::Vote);
                        }
                        if (dec == e)
                            ++correct;
                    }
                }
                AccuracyRow row;
                row.arm = name;
                row.snr_db = snr;
                row.k_captures = k;
                row.n_trials = scenario.trials_per_snr;
                row.accuracy = static_cast<double>(correct) / static_cast<double>(row.n_trials);
                std::tie(row.ci_low, row.ci_high) = wilson_interval(correct, row.n_trials);
                rep.accuracy.push_back(row);
            }
        }

        if (scenario.separation) {
            const auto& g = *scenario.separation;
            const auto n_values = static_cast<std::size_t>(std::llround((g.stop - g.start) / g.step)) + 1;
            std::vector<FrameBuffer> grid;
            std::vector<double> values;
            for (std::size_t v = 0; v < n_values; ++v) {
                EmitterProfile e = scenario.emitters.front();
                e.alpha = g.start + static_cast<double>(v) * g.step;
                values.push_back(e.alpha);
                grid.push_back(make_captures(e, snr, scenario.frame_len, scenario.sps,
                                             derive_seed(derive_seed(snr_seed, 3), v), g.frames_per_value, threads));
            }
            for (const auto& [name, est] : arms) {
                std::vector<GaussianFit> fits;
                for (std::size_t v = 0; v < n_values; ++v)
                    fits.push_back(fit_gaussian(est->estimate(grid[v].block()), values[v]));
                for (double target : scenario.separation_targets) {
                    const auto r = min_separation(fits, target);
                    rep.separation.push_back({name, snr, target, r.achievable, r.achievable ? r.delta : 0.0});
                }
            }
        }
    }
    return rep;
}

ScenarioReport wide_vs_narrow_study(Table2Scenario scenario, std::shared_ptr<const Estimator> wide,
                                    std::shared_ptr<const Estimator> narrow, unsigned threads)
{
    require(wide != nullptr, ErrorCode::Config, "wide-range estimator missing");
    require(narrow != nullptr, ErrorCode::Config, "narrow-range estimator missing");
    if (!scenario.separation)
        scenario.separation = SeparationGrid{};
    return run_table2_scenario(scenario, {{"wide", std::move(wide)}, {"narrow", std::move(narrow)}}, threads);
}

}  // namespace rfsei
