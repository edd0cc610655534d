#include "rfsei/decision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rfsei/error.hpp"
#include "rfsei/stats.hpp"

namespace rfsei {

using nlohmann::json;

double GaussianFit::sigma() const { return std::sqrt(sigma2); }

double GaussianFit::log_pdf(double x) const
{
    const double d = x - mu;
    return -0.5 * (d * d / sigma2 + std::log(2.0 * std::numbers::pi * sigma2));
}

double GaussianFit::pdf(double x) const { return std::exp(log_pdf(x)); }

namespace {

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double null_to_nan(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::numeric_limits<double>::quiet_NaN();
    return j.at(key).get<double>();
}

}  // namespace

json GaussianFit::to_json() const
{
    return json{{"mu", mu},
                {"sigma2", sigma2},
                {"source_value", nan_to_null(source_value)},
                {"n_samples", n_samples},
                {"gof_p_value", nan_to_null(gof_p_value)}};
}

GaussianFit GaussianFit::from_json(const json& j)
{
    GaussianFit f;
    try {
        f.mu = j.at("mu").get<double>();
        f.sigma2 = j.at("sigma2").get<double>();
        f.source_value = null_to_nan(j, "source_value");
        f.n_samples = j.value("n_samples", std::size_t{0});
        f.gof_p_value = null_to_nan(j, "gof_p_value");
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("malformed Gaussian fit: ") + e.what());
    }
    require(std::isfinite(f.mu) && f.sigma2 > 0.0 && std::isfinite(f.sigma2), ErrorCode::Format,
            "Gaussian fit needs finite mu and positive sigma2");
    return f;
}

GofResult chi2_gof(std::span<const double> samples, const GaussianFit& fit)
{
    const std::size_t n = samples.size();
    require(n >= kMinFitSamples, ErrorCode::Numeric,
            "chi-squared test needs at least " + std::to_string(kMinFitSamples) + " samples");
    require(fit.sigma2 > 0.0, ErrorCode::Degenerate, "chi-squared test against a zero-variance fit");
    const double nd = static_cast<double>(n);
    const auto by_rule = static_cast<std::size_t>(std::lround(2.0 * std::pow(nd, 0.4)));
    const std::size_t k = std::min(by_rule, n / 5);
    require(k >= 4, ErrorCode::Numeric, "too few usable bins for the chi-squared test");

    std::vector<std::size_t> observed(k, 0);
    const double sigma = fit.sigma();
    for (double x : samples) {
        const double u = stats::normal_cdf((x - fit.mu) / sigma);
        const auto b = std::min(k - 1, static_cast<std::size_t>(u * static_cast<double>(k)));
        ++observed[b];
    }
    const double expected = nd / static_cast<double>(k);
    double stat = 0.0;
    for (std::size_t o : observed) {
        const double d = static_cast<double>(o) - expected;
        stat += d * d / expected;
    }
    GofResult r;
    r.statistic = stat;
    r.bins = k;
    r.dof = k - 3;
    r.p_value = stats::chi2_sf(stat, static_cast<double>(r.dof));
    return r;
}

GaussianFit fit_gaussian(std::span<const double> estimates, double source_value)
{
    require(estimates.size() >= kMinFitSamples, ErrorCode::Numeric,
            "Gaussian fit needs at least " + std::to_string(kMinFitSamples) + " samples");
    for (double x : estimates)
        require(std::isfinite(x), ErrorCode::Numeric, "non-finite estimate in Gaussian fit");
    GaussianFit f;
    f.mu = stats::mean(estimates);
    f.sigma2 = stats::sample_variance(estimates);
    require(f.sigma2 > 0.0, ErrorCode::Degenerate, "degenerate Gaussian fit: zero variance");
    f.source_value = source_value;
    f.n_samples = estimates.size();
    f.gof_p_value = chi2_gof(estimates, f).p_value;
    return f;
}

BoundarySet bayes_boundary(const GaussianFit& a, const GaussianFit& b)
{
    require(a.mu != b.mu || a.sigma2 != b.sigma2, ErrorCode::Degenerate, "identical fits have no decision boundary");
    BoundarySet out;
    if (a.sigma2 == b.sigma2) {
        const double mid = 0.5 * (a.mu + b.mu);
        out.roots = {mid};
        out.operative = mid;
        return out;
    }
    // (x - m1)^2 / v1 + ln v1 = (x - m2)^2 / v2 + ln v2
    const double qa = 1.0 / a.sigma2 - 1.0 / b.sigma2;
    const double qb = -2.0 * (a.mu / a.sigma2 - b.mu / b.sigma2);
    const double qc = a.mu * a.mu / a.sigma2 - b.mu * b.mu / b.sigma2 + std::log(a.sigma2 / b.sigma2);
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    double r1 = q / qa;
    double r2 = q != 0.0 ? qc / q : r1;
    if (r1 > r2)
        std::swap(r1, r2);
    out.roots = {r1, r2};
    if (a.mu == b.mu)
        return out;
    // The narrower fit wins between the roots, so the lower-mean fit hands over to the
    // higher-mean one at the upper root when it is the narrower one, else at the lower root.
    const GaussianFit& lower = a.mu < b.mu ? a : b;
    const GaussianFit& upper = a.mu < b.mu ? b : a;
    out.operative = lower.sigma2 < upper.sigma2 ? r2 : r1;
    return out;
}

double misid_probability(const GaussianFit& fit, double d, Side side)
{
    const double z = (d - fit.mu) / fit.sigma();
    return side == Side::Above ? stats::normal_q(z) : stats::normal_q(-z);
}

double pairwise_misid(const GaussianFit& a, const GaussianFit& b)
{
    if (a.mu == b.mu)
        return 0.5;
    const GaussianFit& lo = a.mu < b.mu ? a : b;
    const GaussianFit& hi = a.mu < b.mu ? b : a;
    const auto bs = bayes_boundary(lo, hi);
    const double d = *bs.operative;
    return 0.5 * (misid_probability(lo, d, Side::Above) + misid_probability(hi, d, Side::Below));
}

SeparationResult min_separation(std::span<const GaussianFit> fits, double target_err)
{
    require(target_err > 0.0 && target_err < 0.5, ErrorCode::Config, "target error must lie in (0, 0.5)");
    require(fits.size() >= 2, ErrorCode::Config, "min_separation needs at least two fits");
    for (const auto& f : fits)
        require(std::isfinite(f.source_value), ErrorCode::Config, "min_separation needs the source value of every fit");
    const double step = fits[1].source_value - fits[0].source_value;
    require(step > 0.0, ErrorCode::Config, "fits must be ordered by increasing source value");
    for (std::size_t i = 1; i < fits.size(); ++i)
        require(std::abs(fits[i].source_value - fits[i - 1].source_value - step) <= 1e-6 * std::max(1.0, step),
                ErrorCode::Config, "fits must sit on an evenly spaced grid");

    SeparationResult res;
    for (std::size_t s = 1; s < fits.size(); ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i + s < fits.size(); ++i)
            acc += pairwise_misid(fits[i], fits[i + s]);
        const double avg = acc / static_cast<double>(fits.size() - s);
        res.mean_error_by_step.push_back(avg);
        if (!res.achievable && avg < target_err) {
            res.achievable = true;
            res.steps = s;
            res.delta = static_cast<double>(s) * step;
        }
    }
    return res;
}

DecisionModel DecisionModel::build(std::vector<GaussianFit> fits, double significance)
{
    require(fits.size() >= 2, ErrorCode::Config, "decision model needs at least two fits");
    require(significance > 0.0 && significance < 1.0, ErrorCode::Config, "significance must lie in (0, 1)");
    DecisionModel m;
    m.fits = std::move(fits);
    m.significance = significance;
    for (const auto& f : m.fits)
        require(std::isfinite(f.mu) && f.sigma2 > 0.0, ErrorCode::Degenerate, "decision model needs non-degenerate fits");
    m.order.resize(m.fits.size());
    std::iota(m.order.begin(), m.order.end(), std::size_t{0});
    std::stable_sort(m.order.begin(), m.order.end(),
                     [&](std::size_t i, std::size_t j) { return m.fits[i].mu < m.fits[j].mu; });
    for (std::size_t k = 0; k + 1 < m.order.size(); ++k) {
        const auto& lo = m.fits[m.order[k]];
        const auto& hi = m.fits[m.order[k + 1]];
        require(lo.mu < hi.mu, ErrorCode::Degenerate, "decision model needs fits with distinct means");
        m.boundaries.push_back(bayes_boundary(lo, hi));
    }

    const auto th = m.thresholds();
    const std::size_t n = m.fits.size();
    m.misid.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t t = 0; t < n; ++t) {
        const auto& f = m.fits[t];
        double off = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t bin = m.order[r];
            if (bin == t)
                continue;
            const double lo = r == 0 ? -std::numeric_limits<double>::infinity() : th[r - 1];
            const double hi = r + 1 == n ? std::numeric_limits<double>::infinity() : th[r];
            const double p = std::max(0.0, misid_probability(f, lo, Side::Above) - misid_probability(f, hi, Side::Above));
            m.misid[t][bin] = p;
            off += p;
        }
        m.misid[t][t] = std::clamp(1.0 - off, 0.0, 1.0);
    }
    return m;
}

std::vector<double> DecisionModel::thresholds() const
{
    std::vector<double> th;
    th.reserve(boundaries.size());
    for (const auto& b : boundaries)
        th.push_back(*b.operative);
    return th;
}

DecisionModel DecisionModel::aggregated(std::size_t k) const
{
    require(k >= 1, ErrorCode::Config, "aggregation needs at least one capture");
    auto f = fits;
    for (auto& g : f)
        g.sigma2 /= static_cast<double>(k);
    return build(std::move(f), significance);
}

std::size_t classify(double estimate, const DecisionModel& model)
{
    require(!model.order.empty(), ErrorCode::Config, "empty decision model");
    require(!std::isnan(estimate), ErrorCode::Numeric, "cannot classify a NaN estimate");
    std::size_t r = 0;
    for (const auto& b : model.boundaries) {
        if (estimate <= *b.operative)
            break;
        ++r;
    }
    return model.order[r];
}

json DecisionModel::to_json() const
{
    json jf = json::array();
    for (const auto& f : fits)
        jf.push_back(f.to_json());
    json jb = json::array();
    for (std::size_t k = 0; k < boundaries.size(); ++k)
        jb.push_back({{"lower_bin", order[k]},
                      {"upper_bin", order[k + 1]},
                      {"roots", boundaries[k].roots},
                      {"operative", *boundaries[k].operative}});
    return json{{"significance", significance}, {"fits", jf}, {"boundaries", jb}, {"misid", misid}};
}

DecisionModel DecisionModel::from_json(const json& j)
{
    std::vector<GaussianFit> fits;
    double significance = 0.05;
    try {
        significance = j.value("significance", significance);
        for (const auto& f : j.at("fits"))
            fits.push_back(GaussianFit::from_json(f));
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("malformed decision model: ") + e.what());
    }
    return build(std::move(fits), significance);
}

}  // namespace rfsei
