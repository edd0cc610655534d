#include "rfsei/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "rfsei/error.hpp"

namespace rfsei::stats {

namespace {

constexpr double kTol = 1e-12;
constexpr int kMaxIter = 10000;

double gamma_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kTol)
            break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Lentz evaluation of the continued fraction for Q(a, x).
double gamma_continued_fraction(double a, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kTol)
            break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double normal_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_q(double p)
{
    require(p > 0.0 && p < 1.0, ErrorCode::Numeric, "inverse_normal_q needs p in (0, 1)");
    // Acklam's rational approximation of the lower quantile, then Halley refinement.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    const double lower = 1.0 - p;
    double x = 0.0;
    if (lower < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(lower));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (lower <= 1.0 - 0.02425) {
        const double q = lower - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double e = normal_q(x) - p;
        const double u = -e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

double regularized_gamma_p(double a, double x)
{
    require(a > 0.0, ErrorCode::Numeric, "incomplete gamma needs a > 0");
    require(x >= 0.0, ErrorCode::Numeric, "incomplete gamma needs x >= 0");
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    if (x < a + 1.0)
        return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x)
{
    require(a > 0.0, ErrorCode::Numeric, "incomplete gamma needs a > 0");
    require(x >= 0.0, ErrorCode::Numeric, "incomplete gamma needs x >= 0");
    if (x == 0.0)
        return 1.0;
    if (std::isinf(x))
        return 0.0;
    if (x < a + 1.0)
        return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double chi2_cdf(double x, double dof) { return x <= 0.0 ? 0.0 : regularized_gamma_p(dof / 2.0, x / 2.0); }

double chi2_sf(double x, double dof) { return x <= 0.0 ? 1.0 : regularized_gamma_q(dof / 2.0, x / 2.0); }

double mean(std::span<const double> v)
{
    require(!v.empty(), ErrorCode::Numeric, "mean of an empty sample");
    // Shifted by the first value so constant samples return exactly that value.
    const double x0 = v.front();
    double s = 0.0;
    for (double x : v)
        s += x - x0;
    return x0 + s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v)
{
    require(v.size() >= 2, ErrorCode::Numeric, "sample variance needs at least two values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double pearson(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::Numeric, "pearson needs two equal-length samples");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::Numeric, "pearson correlation undefined for a constant sample");
    return sxy / std::sqrt(sxx * syy);
}

double kolmogorov_sf(double t)
{
    if (t <= 0.0)
        return 1.0;
    if (t < 0.2)
        return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16)
            break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_uniform_pvalue(std::span<const double> samples, double lo, double hi)
{
    require(!samples.empty(), ErrorCode::Numeric, "KS test of an empty sample");
    require(hi > lo, ErrorCode::Numeric, "KS test needs hi > lo");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = std::clamp((s[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace rfsei::stats
