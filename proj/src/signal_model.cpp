#include "rfsei/signal_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "rfsei/error.hpp"
#include "rfsei/rng.hpp"

namespace rfsei {

namespace {

constexpr int kShapingRate = 4;        // intermediate samples/symbol for fractional rates
constexpr int kInterpPhases = 64;
constexpr int kInterpHalfWidth = 16;   // taps per side, in input samples
constexpr double kKaiserBeta = 8.0;

unsigned gray(unsigned k) { return k ^ (k >> 1); }

bool is_integer_rate(double sps) { return std::abs(sps - std::round(sps)) < 1e-12; }

// Time (symbol periods) of output sample 0 relative to the centre of symbol 0, negated.
double shaping_delay(double sps)
{
    if (is_integer_rate(sps)) {
        const int isps = static_cast<int>(std::lround(sps));
        return std::floor(kRrcSpanSymbols * isps / 2.0) / isps;
    }
    return std::floor(kRrcSpanSymbols * kShapingRate / 2.0) / kShapingRate;
}

std::size_t transient_samples(double sps) { return static_cast<std::size_t>(std::ceil(kRrcSpanSymbols * sps)); }

std::vector<cplx> shape_integer(std::span<const cplx> symbols, int sps, double rolloff)
{
    const auto taps = rrc_taps(rolloff, sps);
    const std::size_t out_len = (symbols.size() - 1) * static_cast<std::size_t>(sps) + taps.size();
    std::vector<cplx> out(out_len);
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        const std::size_t base = k * static_cast<std::size_t>(sps);
        for (std::size_t t = 0; t < taps.size(); ++t)
            out[base + t] += symbols[k] * taps[t];
    }
    return out;
}

double sinc(double x)
{
    if (std::abs(x) < 1e-12)
        return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// Row p holds h(p/phases - m) for m = -(hw-1) .. hw; rows 0..phases inclusive.
const std::vector<double>& interpolator_bank()
{
    static const std::vector<double> bank = [] {
        constexpr int width = 2 * kInterpHalfWidth;
        std::vector<double> b(static_cast<std::size_t>((kInterpPhases + 1) * width));
        const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
        for (int p = 0; p <= kInterpPhases; ++p) {
            const double frac = static_cast<double>(p) / kInterpPhases;
            for (int m = -(kInterpHalfWidth - 1); m <= kInterpHalfWidth; ++m) {
                const double x = frac - m;
                const double r = x / kInterpHalfWidth;
                const double w = std::abs(r) >= 1.0
                                     ? 0.0
                                     : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / norm;
                b[static_cast<std::size_t>(p * width + (m + kInterpHalfWidth - 1))] = sinc(x) * w;
            }
        }
        return b;
    }();
    return bank;
}

std::vector<cplx> resample(std::span<const cplx> in, double ratio)
{
    // Input is band-limited well below the output Nyquist rate, so the interpolator
    // only has to suppress images; cutoff stays at the input Nyquist frequency.
    const auto& bank = interpolator_bank();
    constexpr int width = 2 * kInterpHalfWidth;
    const auto out_len = static_cast<std::size_t>(std::floor((static_cast<double>(in.size()) - 1.0) * ratio)) + 1;
    std::vector<cplx> out(out_len);
    const auto n_in = static_cast<std::ptrdiff_t>(in.size());
    for (std::size_t n = 0; n < out_len; ++n) {
        const double t = static_cast<double>(n) / ratio;
        const auto i0 = static_cast<std::ptrdiff_t>(std::floor(t));
        const double pf = (t - static_cast<double>(i0)) * kInterpPhases;
        const int p = std::min(static_cast<int>(pf), kInterpPhases - 1);
        const double w = pf - p;
        const double* lo = bank.data() + static_cast<std::size_t>(p * width);
        const double* hi = lo + width;
        cplx acc{};
        for (int m = -(kInterpHalfWidth - 1); m <= kInterpHalfWidth; ++m) {
            const std::ptrdiff_t i = i0 + m;
            if (i < 0 || i >= n_in)
                continue;
            const int idx = m + kInterpHalfWidth - 1;
            acc += in[static_cast<std::size_t>(i)] * ((1.0 - w) * lo[idx] + w * hi[idx]);
        }
        out[n] = acc;
    }
    return out;
}

void normalize_power(std::vector<cplx>& x, std::size_t skip)
{
    std::span<const cplx> region(x);
    if (x.size() > 2 * skip)
        region = region.subspan(skip, x.size() - 2 * skip);
    const double p = mean_power(region);
    require(p > 0.0, ErrorCode::Numeric, "modulated signal has zero power");
    const double g = 1.0 / std::sqrt(p);
    for (auto& v : x)
        v *= g;
}

}  // namespace

std::string to_string(ModulationFamily family) { return family == ModulationFamily::Qam ? "QAM" : "PSK"; }

ModulationFamily parse_family(const std::string& text)
{
    std::string up;
    for (char c : text)
        up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (up == "QAM")
        return ModulationFamily::Qam;
    if (up == "PSK")
        return ModulationFamily::Psk;
    fail(ErrorCode::Config, "unknown modulation family '" + text + "'");
}

std::vector<int> supported_orders(ModulationFamily family)
{
    if (family == ModulationFamily::Qam)
        return {8, 16, 32, 64};
    return {2, 4, 8, 16};
}

void ModulationScheme::validate() const
{
    const auto orders = supported_orders(family);
    if (std::find(orders.begin(), orders.end(), order) == orders.end())
        fail(ErrorCode::Config, "unsupported " + to_string(family) + " order " + std::to_string(order));
}

std::string ModulationScheme::name() const
{
    if (family == ModulationFamily::Psk && order == 2)
        return "BPSK";
    if (family == ModulationFamily::Psk && order == 4)
        return "QPSK";
    return std::to_string(order) + to_string(family);
}

ModulationScheme ModulationScheme::parse(const std::string& text)
{
    std::string up;
    for (char c : text)
        up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    ModulationScheme s;
    if (up == "BPSK") {
        s = {ModulationFamily::Psk, 2};
    } else if (up == "QPSK") {
        s = {ModulationFamily::Psk, 4};
    } else {
        std::size_t digits = 0;
        while (digits < up.size() && std::isdigit(static_cast<unsigned char>(up[digits])))
            ++digits;
        if (digits == 0 || digits == up.size())
            fail(ErrorCode::Config, "cannot parse modulation '" + text + "'");
        s.order = std::stoi(up.substr(0, digits));
        s.family = parse_family(up.substr(digits));
    }
    s.validate();
    return s;
}

void ImpairmentParams::validate() const
{
    auto in = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
    require(in(alpha, -kAlphaLimit, kAlphaLimit), ErrorCode::Config,
            "alpha " + std::to_string(alpha) + " outside [-0.9, 0.9]");
    require(in(theta_deg, -kThetaLimitDeg, kThetaLimitDeg), ErrorCode::Config,
            "theta " + std::to_string(theta_deg) + " outside [-10, 10] degrees");
    require(in(freq_offset, -kFreqLimit, kFreqLimit), ErrorCode::Config,
            "frequency offset " + std::to_string(freq_offset) + " outside [-0.1, 0.1]");
    require(std::isfinite(sps) && sps > kSpsMin && sps <= kSpsMax, ErrorCode::Config,
            "samples per symbol " + std::to_string(sps) + " outside (1, 16]");
    require((snr_db == std::numeric_limits<double>::infinity()) || in(snr_db, kSnrMinDb, kSnrMaxDb),
            ErrorCode::Config, "SNR " + std::to_string(snr_db) + " dB outside [0, 35]");
}

std::vector<cplx> build_constellation(const ModulationScheme& scheme)
{
    scheme.validate();
    const auto m = static_cast<unsigned>(scheme.order);
    std::vector<cplx> pts(m);

    if (scheme.family == ModulationFamily::Psk) {
        const double offset = m == 4 ? std::numbers::pi / 4.0 : 0.0;
        for (unsigned k = 0; k < m; ++k)
            pts[gray(k)] = std::polar(1.0, offset + 2.0 * std::numbers::pi * k / m);
        return pts;
    }

    auto axis_levels = [](unsigned n) {
        // Gray-labelled PAM levels: label gray(i) sits at 2i - n + 1.
        std::vector<double> lv(n);
        for (unsigned i = 0; i < n; ++i)
            lv[gray(i)] = 2.0 * i - n + 1.0;
        return lv;
    };

    if (m == 32) {
        // Cross constellation: 6x6 grid without the four corners, raster-labelled.
        unsigned idx = 0;
        for (int q = 5; q >= -5; q -= 2)
            for (int i = -5; i <= 5; i += 2)
                if (!(std::abs(i) == 5 && std::abs(q) == 5))
                    pts[idx++] = cplx(i, q);
    } else {
        const unsigned ni = m == 8 ? 4 : static_cast<unsigned>(std::lround(std::sqrt(m)));
        const unsigned nq = m / ni;
        const auto li = axis_levels(ni);
        const auto lq = axis_levels(nq);
        const unsigned qbits = static_cast<unsigned>(std::lround(std::log2(nq)));
        for (unsigned a = 0; a < ni; ++a)
            for (unsigned b = 0; b < nq; ++b)
                pts[(a << qbits) | b] = cplx(li[a], lq[b]);
    }

    double p = 0.0;
    for (const auto& v : pts)
        p += std::norm(v);
    const double g = 1.0 / std::sqrt(p / m);
    for (auto& v : pts)
        v *= g;
    return pts;
}

double rrc_pulse(double t, double beta)
{
    const double pi = std::numbers::pi;
    if (std::abs(t) < 1e-12)
        return 1.0 - beta + 4.0 * beta / pi;
    if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
        return beta / std::numbers::sqrt2 *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
    const double den = pi * t * (1.0 - 16.0 * beta * beta * t * t);
    return num / den;
}

std::vector<double> rrc_taps(double rolloff, int sps, int span_symbols)
{
    require(rolloff > 0.0 && rolloff <= 1.0, ErrorCode::Config, "roll-off must lie in (0, 1]");
    require(sps >= 2, ErrorCode::Config, "integer RRC taps need sps >= 2");
    require(span_symbols > 0, ErrorCode::Config, "filter span must be positive");
    const int half = span_symbols * sps / 2;
    std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
    double energy = 0.0;
    for (int k = -half; k <= half; ++k) {
        const double v = rrc_pulse(static_cast<double>(k) / sps, rolloff);
        h[static_cast<std::size_t>(k + half)] = v;
        energy += v * v;
    }
    const double g = 1.0 / std::sqrt(energy);
    for (auto& v : h)
        v *= g;
    return h;
}

std::vector<cplx> modulate(std::span<const cplx> symbols, double sps, double rolloff)
{
    require(!symbols.empty(), ErrorCode::Config, "cannot modulate an empty symbol sequence");
    require(std::isfinite(sps) && sps > 1.0, ErrorCode::Config, "samples per symbol must exceed 1");
    require(rolloff > 0.0 && rolloff <= 1.0, ErrorCode::Config, "roll-off must lie in (0, 1]");

    std::vector<cplx> out;
    if (is_integer_rate(sps) && std::lround(sps) >= 2) {
        out = shape_integer(symbols, static_cast<int>(std::lround(sps)), rolloff);
    } else {
        const auto shaped = shape_integer(symbols, kShapingRate, rolloff);
        out = resample(shaped, sps / kShapingRate);
    }
    normalize_power(out, transient_samples(sps));
    return out;
}

std::vector<cplx> apply_iq_imbalance(std::span<const cplx> signal, double alpha, double theta_deg)
{
    const double theta = theta_deg * std::numbers::pi / 180.0;
    const cplx gain_i = (1.0 + alpha) * cplx(std::cos(theta), std::sin(theta));
    std::vector<cplx> out(signal.size());
    for (std::size_t n = 0; n < signal.size(); ++n)
        out[n] = gain_i * signal[n].real() + cplx(0.0, signal[n].imag());
    return out;
}

std::vector<cplx> apply_freq_offset(std::span<const cplx> signal, double f_norm)
{
    require(std::isfinite(f_norm) && std::abs(f_norm) <= 0.5, ErrorCode::Config,
            "normalized frequency offset must lie in [-0.5, 0.5]");
    std::vector<cplx> out(signal.size());
    const double w = 2.0 * std::numbers::pi * f_norm;
    for (std::size_t n = 0; n < signal.size(); ++n) {
        // Phase from n directly (no accumulator drift); reduce first for accuracy on long runs.
        const double ph = std::remainder(w * static_cast<double>(n), 2.0 * std::numbers::pi);
        out[n] = signal[n] * cplx(std::cos(ph), std::sin(ph));
    }
    return out;
}

double mean_power(std::span<const cplx> signal)
{
    if (signal.empty())
        return 0.0;
    double acc = 0.0;
    for (const auto& v : signal)
        acc += std::norm(v);
    return acc / static_cast<double>(signal.size());
}

std::vector<cplx> add_awgn(std::span<const cplx> signal, double snr_db, std::uint64_t seed)
{
    require(!signal.empty(), ErrorCode::Config, "cannot add noise to an empty signal");
    require(!std::isnan(snr_db), ErrorCode::Config, "SNR is NaN");
    std::vector<cplx> out(signal.begin(), signal.end());
    if (snr_db == std::numeric_limits<double>::infinity())
        return out;
    const double p_sig = mean_power(signal);
    require(p_sig > 0.0, ErrorCode::Numeric, "cannot reference noise to a zero-power signal");
    const double noise_var = p_sig / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& v : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cplx(re, im);
    }
    return out;
}

std::vector<cplx> random_symbols(const ModulationScheme& scheme, std::size_t count, std::uint64_t seed)
{
    const auto pts = build_constellation(scheme);
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    std::vector<cplx> out(count);
    for (auto& v : out)
        v = pts[pick(rng)];
    return out;
}

SynthesizedFrame synthesize_frame_detailed(const ModulationScheme& scheme, const ImpairmentParams& params,
                                           std::size_t n_samples, std::uint64_t seed)
{
    scheme.validate();
    params.validate();
    require(n_samples > 0, ErrorCode::Config, "frame length must be positive");

    const std::size_t skip = transient_samples(params.sps);
    const auto n_symbols =
        static_cast<std::size_t>(std::ceil(static_cast<double>(n_samples) / params.sps)) + 2 * kRrcSpanSymbols + 32;

    auto symbols = random_symbols(scheme, n_symbols, derive_seed(seed, 0));
    auto shaped = modulate(symbols, params.sps, kRrcRolloff);
    auto impaired = apply_iq_imbalance(shaped, params.alpha, params.theta_deg);
    auto rotated = apply_freq_offset(impaired, params.freq_offset);

    if (rotated.size() < 2 * skip + n_samples)
        fail(ErrorCode::Internal, "generator under-produced samples for the requested frame length");
    const std::size_t max_start = rotated.size() - skip - n_samples;
    auto rng = make_rng(derive_seed(seed, 1));
    std::uniform_int_distribution<std::size_t> start_dist(skip, max_start);
    const std::size_t start = start_dist(rng);

    SynthesizedFrame out;
    out.clean.assign(rotated.begin() + static_cast<std::ptrdiff_t>(start),
                     rotated.begin() + static_cast<std::ptrdiff_t>(start + n_samples));
    out.frame.samples = add_awgn(out.clean, params.snr_db, derive_seed(seed, 2));
    out.frame.truth = params;
    out.frame.scheme = scheme;
    out.frame.seed = seed;
    out.symbols = std::move(symbols);
    out.first_symbol_time = static_cast<double>(start) / params.sps - shaping_delay(params.sps);
    return out;
}

IqFrame synthesize_frame(const ModulationScheme& scheme, const ImpairmentParams& params, std::size_t n_samples,
                         std::uint64_t seed)
{
    return std::move(synthesize_frame_detailed(scheme, params, n_samples, seed).frame);
}

}  // namespace rfsei
