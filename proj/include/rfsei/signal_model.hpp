#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rfsei {

using cplx = std::complex<double>;

enum class ModulationFamily : std::uint32_t { Qam = 0, Psk = 1 };

struct ModulationScheme {
    ModulationFamily family = ModulationFamily::Psk;
    int order = 4;

    /// Throws ErrorCode::Config for orders outside {8,16,32,64} (QAM) / {2,4,8,16} (PSK).
    void validate() const;
    std::string name() const;  ///< e.g. "16QAM", "QPSK"

    /// Accepts "16QAM", "8psk", "QPSK", "BPSK".
    static ModulationScheme parse(const std::string& text);

    friend bool operator==(const ModulationScheme&, const ModulationScheme&) = default;
};

std::string to_string(ModulationFamily family);
ModulationFamily parse_family(const std::string& text);

/// Every supported order of a family, ascending.
std::vector<int> supported_orders(ModulationFamily family);

/// Transmitter and channel impairments of one capture.
struct ImpairmentParams {
    double alpha = 0.0;        ///< linear gain imbalance on the in-phase branch
    double theta_deg = 0.0;    ///< phase imbalance, degrees
    double freq_offset = 0.0;  ///< carrier offset, cycles per sample
    double sps = 2.0;          ///< samples per symbol
    double snr_db = std::numeric_limits<double>::infinity();  ///< +inf means noiseless

    static constexpr double kAlphaLimit = 0.9;
    static constexpr double kThetaLimitDeg = 10.0;
    static constexpr double kFreqLimit = 0.1;
    static constexpr double kSnrMinDb = 0.0;
    static constexpr double kSnrMaxDb = 35.0;
    static constexpr double kSpsMin = 1.0;
    static constexpr double kSpsMax = 16.0;

    void validate() const;
};

struct IqFrame {
    std::vector<cplx> samples;
    ImpairmentParams truth;
    ModulationScheme scheme;
    std::uint64_t seed = 0;
};

inline constexpr double kRrcRolloff = 0.35;
inline constexpr int kRrcSpanSymbols = 11;

/// Constellation indexed by bit label, unit average power.
std::vector<cplx> build_constellation(const ModulationScheme& scheme);

/// Root-raised-cosine impulse response sampled at t = k/sps, |k| <= floor(span*sps/2),
/// normalized to unit energy. `sps` must be an integer >= 2 here.
std::vector<double> rrc_taps(double rolloff, int sps, int span_symbols = kRrcSpanSymbols);

/// Continuous-time RRC pulse value at t (symbol periods), not energy-normalized.
double rrc_pulse(double t, double rolloff);

/// Upsample + RRC pulse shaping, output renormalized to unit average power.
/// Integer sps gives the full linear convolution, so sample n sits at
/// t = (n - floor(span*sps/2))/sps symbol periods after the first symbol. Fractional
/// rates are shaped at 4 samples/symbol and resampled with a 64-phase windowed-sinc
/// interpolator, giving t = n/sps - floor(span*4/2)/4.
std::vector<cplx> modulate(std::span<const cplx> symbols, double sps, double rolloff = kRrcRolloff);

/// Transmit IQ imbalance on the in-phase branch: out = (1+alpha) e^{j theta} I + j Q.
std::vector<cplx> apply_iq_imbalance(std::span<const cplx> signal, double alpha, double theta_deg);

/// out[n] = in[n] e^{j 2 pi f n}
std::vector<cplx> apply_freq_offset(std::span<const cplx> signal, double f_norm);

/// Circular complex AWGN at the requested SNR relative to the measured signal power.
/// snr_db = +inf returns the input unchanged.
std::vector<cplx> add_awgn(std::span<const cplx> signal, double snr_db, std::uint64_t seed);

double mean_power(std::span<const cplx> signal);

/// Uniform random constellation symbols.
std::vector<cplx> random_symbols(const ModulationScheme& scheme, std::size_t count, std::uint64_t seed);

struct SynthesizedFrame {
    IqFrame frame;               ///< noisy capture
    std::vector<cplx> clean;     ///< same capture before noise
    std::vector<cplx> symbols;   ///< transmitted symbols
    double first_symbol_time;    ///< time of frame sample 0, in symbol periods after symbol 0
};

/// symbols -> modulate -> IQ imbalance -> frequency offset -> crop -> AWGN.
/// The crop start is uniform over the region free of filter transients; AWGN power is
/// referenced to the cropped capture. Pure function of its arguments.
SynthesizedFrame synthesize_frame_detailed(const ModulationScheme& scheme, const ImpairmentParams& params,
                                           std::size_t n_samples, std::uint64_t seed);

IqFrame synthesize_frame(const ModulationScheme& scheme, const ImpairmentParams& params, std::size_t n_samples,
                         std::uint64_t seed);

}  // namespace rfsei
