#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace rfsei {

struct GaussianFit {
    double mu = 0.0;
    double sigma2 = 1.0;
    double source_value = std::numeric_limits<double>::quiet_NaN();  ///< offset the samples came from
    std::size_t n_samples = 0;
    double gof_p_value = std::numeric_limits<double>::quiet_NaN();

    double sigma() const;
    double log_pdf(double x) const;
    double pdf(double x) const;

    nlohmann::json to_json() const;
    static GaussianFit from_json(const nlohmann::json& j);

    friend bool operator==(const GaussianFit&, const GaussianFit&) = default;
};

inline constexpr std::size_t kMinFitSamples = 30;

struct GofResult {
    double statistic = 0.0;
    std::size_t bins = 0;
    std::size_t dof = 0;
    double p_value = 0.0;
};

/// Pearson chi-squared test against the fitted Gaussian using equal-probability bins
/// (about 2 n^0.4 of them, each expecting at least 5 samples) and bins - 3 degrees of freedom.
GofResult chi2_gof(std::span<const double> samples, const GaussianFit& fit);

/// Sample mean and Bessel-corrected variance with the chi-squared p-value attached.
/// Zero variance raises ErrorCode::Degenerate.
GaussianFit fit_gaussian(std::span<const double> estimates,
                         double source_value = std::numeric_limits<double>::quiet_NaN());

/// Crossings of two Gaussian densities. `operative` is the crossing where the decision
/// passes from the lower-mean fit to the higher-mean one; it lies between the means
/// whenever any crossing does, and is absent when the means coincide.
struct BoundarySet {
    std::vector<double> roots;
    std::optional<double> operative;
};

/// Identical fits raise ErrorCode::Degenerate.
BoundarySet bayes_boundary(const GaussianFit& a, const GaussianFit& b);

enum class Side { Above, Below };

/// Tail mass of `fit` above or below `d`.
double misid_probability(const GaussianFit& fit, double d, Side side);

/// Equal-prior error of the single-threshold rule between two fits.
double pairwise_misid(const GaussianFit& a, const GaussianFit& b);

struct SeparationResult {
    bool achievable = false;
    double delta = std::numeric_limits<double>::quiet_NaN();
    std::size_t steps = 0;                  ///< delta in grid steps
    std::vector<double> mean_error_by_step;  ///< index s-1 holds the average error at s steps
};

/// Smallest grid separation whose average pairwise mis-ID probability drops below
/// `target_err`. Fits must sit on an evenly spaced grid of source values.
SeparationResult min_separation(std::span<const GaussianFit> fits, double target_err);

/// Fits with the boundaries and mis-ID matrix they imply. Bins are indexed in the
/// order the fits were supplied; regions follow the order of their means.
struct DecisionModel {
    std::vector<GaussianFit> fits;
    std::vector<std::size_t> order;        ///< fit indices by increasing mean
    std::vector<BoundarySet> boundaries;   ///< between order[k] and order[k+1]
    std::vector<std::vector<double>> misid;  ///< [true bin][decided bin]
    double significance = 0.05;

    /// Needs at least two fits with distinct means.
    static DecisionModel build(std::vector<GaussianFit> fits, double significance = 0.05);

    /// Operative thresholds between consecutive regions.
    std::vector<double> thresholds() const;

    /// Model for the mean of k independent estimates (variances divided by k).
    DecisionModel aggregated(std::size_t k) const;

    nlohmann::json to_json() const;
    static DecisionModel from_json(const nlohmann::json& j);
};

/// Bin whose region contains `estimate`; a value on a boundary goes to the bin with the lower mean.
std::size_t classify(double estimate, const DecisionModel& model);

}  // namespace rfsei
