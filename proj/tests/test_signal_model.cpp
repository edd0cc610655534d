#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>

#include "rfsei/error.hpp"
#include "rfsei/signal_model.hpp"
#include "support.hpp"

using namespace rfsei;

namespace {

/// Averaged periodogram with a Hann window, bins ordered from -fs/2.
std::vector<double> welch_psd(const std::vector<cplx>& x, std::size_t seg)
{
    std::vector<double> psd(seg, 0.0);
    std::vector<double> win(seg);
    for (std::size_t n = 0; n < seg; ++n)
        win[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(seg));
    std::vector<cplx> tw(seg);
    for (std::size_t n = 0; n < seg; ++n)
        tw[n] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(seg));
    for (std::size_t start = 0; start + seg <= x.size(); start += seg / 2) {
        for (std::size_t k = 0; k < seg; ++k) {
            cplx acc = 0.0;
            for (std::size_t n = 0; n < seg; ++n)
                acc += x[start + n] * win[n] * tw[(k * n) % seg];
            psd[(k + seg / 2) % seg] += std::norm(acc);
        }
    }
    return psd;
}

}  // namespace

TEST_SUITE("signal-model")
{
    TEST_CASE("BPSK and QPSK constellations")
    {
        const auto bpsk = build_constellation({ModulationFamily::Psk, 2});
        REQUIRE(bpsk.size() == 2);
        std::set<double> re{bpsk[0].real(), bpsk[1].real()};
        CHECK(re == std::set<double>{-1.0, 1.0});
        CHECK(std::abs(bpsk[0].imag()) < 1e-15);

        const auto qpsk = build_constellation({ModulationFamily::Psk, 4});
        REQUIRE(qpsk.size() == 4);
        for (const auto& p : qpsk) {
            CHECK(std::abs(std::abs(p) - 1.0) < 1e-12);
            const double deg = std::arg(p) * 180.0 / std::numbers::pi;
            const double m = std::fmod(deg + 360.0, 90.0);
            CHECK(std::abs(m - 45.0) < 1e-9);
        }
    }

    TEST_CASE("16QAM grid scale is 1/sqrt(10)")
    {
        const auto pts = build_constellation({ModulationFamily::Qam, 16});
        REQUIRE(pts.size() == 16);
        double p = 0.0;
        for (const auto& v : pts)
            p += std::norm(v);
        CHECK(std::abs(p / 16.0 - 1.0) < 1e-12);
        const double unit = 1.0 / std::sqrt(10.0);
        for (const auto& v : pts) {
            const double a = std::abs(v.real()) / unit;
            const double b = std::abs(v.imag()) / unit;
            CHECK((std::abs(a - 1.0) < 1e-12 || std::abs(a - 3.0) < 1e-12));
            CHECK((std::abs(b - 1.0) < 1e-12 || std::abs(b - 3.0) < 1e-12));
        }
    }

    TEST_CASE("every supported order: distinct points and unit power")
    {
        for (auto fam : {ModulationFamily::Qam, ModulationFamily::Psk})
            for (int order : supported_orders(fam)) {
                const auto pts = build_constellation({fam, order});
                REQUIRE(pts.size() == static_cast<std::size_t>(order));
                double p = 0.0;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    p += std::norm(pts[i]);
                    for (std::size_t j = i + 1; j < pts.size(); ++j)
                        CHECK(std::abs(pts[i] - pts[j]) > 1e-6);
                }
                CHECK(std::abs(p / order - 1.0) < 1e-12);
            }
    }

    TEST_CASE("Gray labelling: nearest neighbours differ in one bit")
    {
        for (auto scheme : {ModulationScheme{ModulationFamily::Psk, 8}, ModulationScheme{ModulationFamily::Psk, 16},
                            ModulationScheme{ModulationFamily::Qam, 16}, ModulationScheme{ModulationFamily::Qam, 64}}) {
            const auto pts = build_constellation(scheme);
            double dmin = 1e9;
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (std::size_t j = i + 1; j < pts.size(); ++j)
                    dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (std::size_t j = i + 1; j < pts.size(); ++j)
                    if (std::abs(pts[i] - pts[j]) < dmin * 1.0001)
                        CHECK(std::popcount(static_cast<unsigned>(i ^ j)) == 1);
        }
    }

    TEST_CASE("unsupported orders are configuration errors")
    {
        CHECK_THROWS_AS(build_constellation({ModulationFamily::Qam, 4}), Error);
        CHECK_THROWS_AS(build_constellation({ModulationFamily::Psk, 32}), Error);
        try {
            build_constellation({ModulationFamily::Qam, 128});
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Config);
        }
        CHECK(ModulationScheme::parse("16qam") == ModulationScheme{ModulationFamily::Qam, 16});
        CHECK(ModulationScheme::parse("QPSK") == ModulationScheme{ModulationFamily::Psk, 4});
        CHECK(ModulationScheme::parse("BPSK") == ModulationScheme{ModulationFamily::Psk, 2});
    }

    TEST_CASE("RRC pulse matches closed-form values")
    {
        // Independent evaluation of the textbook RRC formula, beta = 0.35.
        CHECK(rrc_pulse(0.0, 0.35) == doctest::Approx(1.095633840657307).epsilon(1e-12));
        CHECK(rrc_pulse(0.25, 0.35) == doctest::Approx(0.9571259801100196).epsilon(1e-12));
        CHECK(rrc_pulse(0.5, 0.35) == doctest::Approx(0.6077736180593346).epsilon(1e-12));
        CHECK(rrc_pulse(1.0 / 1.4, 0.35) == doctest::Approx(0.2606034609375506).epsilon(1e-9));
        CHECK(rrc_pulse(1.0, 0.35) == doctest::Approx(-0.08469026591932287).epsilon(1e-12));
        CHECK(rrc_pulse(-2.3, 0.35) == doctest::Approx(0.05977394018301073).epsilon(1e-12));
    }

    TEST_CASE("RRC taps: odd length, symmetric, unit energy")
    {
        for (int sps : {2, 3, 4, 8}) {
            const auto h = rrc_taps(0.35, sps);
            CHECK(h.size() % 2 == 1);
            CHECK(h.size() == static_cast<std::size_t>(2 * (11 * sps / 2) + 1));
            double e = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                e += h[i] * h[i];
                CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]).epsilon(1e-14));
            }
            CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("single centred symbol reproduces the pulse")
    {
        for (int sps : {2, 4}) {
            const cplx s(0.6, -0.8);
            const auto y = modulate(std::vector<cplx>{s}, sps);
            const auto h = rrc_taps(0.35, sps);
            REQUIRE(y.size() == h.size());
            const std::size_t centre = h.size() / 2;
            std::size_t peak = 0;
            for (std::size_t i = 0; i < y.size(); ++i)
                if (std::abs(y[i]) > std::abs(y[peak]))
                    peak = i;
            CHECK(peak == centre);
            const cplx scale = y[centre] / (h[centre] * s);
            CHECK(std::abs(scale.imag()) < 1e-12);
            for (std::size_t i = 0; i < y.size(); ++i)
                CHECK(std::abs(y[i] - scale * h[i] * s) < 1e-12);
        }
    }

    TEST_CASE("modulate rejects empty input and renormalizes power")
    {
        CHECK_THROWS_AS(modulate(std::vector<cplx>{}, 2.0), Error);
        const auto sym = random_symbols({ModulationFamily::Qam, 16}, 2000, 5);
        for (double sps : {2.0, 3.3, 5.4}) {
            const auto y = modulate(sym, sps);
            const auto skip = static_cast<std::size_t>(std::ceil(11 * sps));
            const double p = mean_power(std::span<const cplx>(y).subspan(skip, y.size() - 2 * skip));
            CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("QPSK occupied bandwidth agrees with the raised-cosine spectrum")
    {
        // Two-sided 99% power bandwidth of a raised-cosine spectrum, beta = 0.35, from
        // numerical integration: 1.16666 Rs.
        const auto sym = random_symbols({ModulationFamily::Psk, 4}, 10000, 11);
        const auto y = modulate(sym, 2.0);
        const std::size_t seg = 256;
        const auto psd = welch_psd(y, seg);
        double total = 0.0;
        for (double v : psd)
            total += v;
        // Grow a symmetric window around DC until it holds 99% of the power.
        const std::size_t c = seg / 2;
        double acc = psd[c];
        std::size_t half = 0;
        while (acc < 0.99 * total) {
            ++half;
            acc += psd[c - half] + (c + half < seg ? psd[c + half] : 0.0);
        }
        // Bin width in symbol-rate units is sps/seg; a bin is counted when its centre lies inside.
        const double bw_rs = (2.0 * static_cast<double>(half) + 1.0) * 2.0 / static_cast<double>(seg);
        CHECK(bw_rs == doctest::Approx(1.16666).epsilon(0.05));

        double outside = 0.0;
        for (std::size_t k = 0; k < seg; ++k) {
            const double f_rs = (static_cast<double>(k) - static_cast<double>(c)) * 2.0 / static_cast<double>(seg);
            if (std::abs(f_rs) > 0.5 * 1.35 + 0.05)
                outside += psd[k];
        }
        CHECK(outside / total < 1e-3);
    }

    TEST_CASE("matched filter recovers the symbols of a clean frame")
    {
        for (double sps : {2.0, 3.0, 2.7, 4.6}) {
            for (auto scheme : {ModulationScheme{ModulationFamily::Qam, 16}, ModulationScheme{ModulationFamily::Psk, 8}}) {
                ImpairmentParams p;
                p.sps = sps;
                const auto sf = synthesize_frame_detailed(scheme, p, 1024, 99);
                CAPTURE(sps);
                CHECK(testing::evm_after_matched_filter(sf, sps) < 0.01);
            }
        }
    }

    TEST_CASE("IQ imbalance map")
    {
        const std::vector<cplx> one{cplx(1.0, 0.0)};
        CHECK(apply_iq_imbalance(one, 0.9, 0.0)[0] == cplx(1.9, 0.0));
        const auto r = apply_iq_imbalance(std::vector<cplx>{cplx(1.0, 1.0)}, 0.0, 30.0)[0];
        CHECK(r.real() == doctest::Approx(0.8660254037844387).epsilon(1e-12));
        CHECK(r.imag() == doctest::Approx(1.5).epsilon(1e-12));

        const auto x = random_symbols({ModulationFamily::Qam, 64}, 500, 3);
        CHECK(apply_iq_imbalance(x, 0.0, 0.0) == x);

        // theta = 0: real part scaled by (1 + alpha), imaginary part untouched.
        const auto g = apply_iq_imbalance(x, -0.4, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(g[i].real() == doctest::Approx(0.6 * x[i].real()).epsilon(1e-14));
            CHECK(g[i].imag() == x[i].imag());
        }
    }

    TEST_CASE("IQ imbalance is linear")
    {
        const auto x = random_symbols({ModulationFamily::Qam, 16}, 300, 1);
        const auto y = random_symbols({ModulationFamily::Psk, 8}, 300, 2);
        const double a = 0.7, b = -1.3;
        std::vector<cplx> mix(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            mix[i] = a * x[i] + b * y[i];
        const auto fm = apply_iq_imbalance(mix, 0.37, -7.5);
        const auto fx = apply_iq_imbalance(x, 0.37, -7.5);
        const auto fy = apply_iq_imbalance(y, 0.37, -7.5);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(fm[i] - (a * fx[i] + b * fy[i])) < 1e-12);
    }

    TEST_CASE("frequency offset")
    {
        const std::vector<cplx> ones(8, cplx(1.0, 0.0));
        const auto q = apply_freq_offset(ones, 0.25);
        const cplx cycle[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        for (std::size_t n = 0; n < q.size(); ++n)
            CHECK(std::abs(q[n] - cycle[n % 4]) < 1e-12);

        const auto x = random_symbols({ModulationFamily::Qam, 32}, 4096, 8);
        CHECK(apply_freq_offset(x, 0.0) == x);
        const auto r = apply_freq_offset(x, -0.0937);
        for (std::size_t n = 0; n < x.size(); ++n)
            CHECK(std::abs(std::abs(r[n]) - std::abs(x[n])) < 1e-12);
        CHECK_THROWS_AS(apply_freq_offset(x, 0.6), Error);
    }

    TEST_CASE("AWGN calibration and determinism")
    {
        const auto x = random_symbols({ModulationFamily::Psk, 4}, 100000, 21);
        CHECK(add_awgn(x, std::numeric_limits<double>::infinity(), 1) == x);
        const auto y = add_awgn(x, 0.0, 4);
        double pn = 0.0, pi = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const cplx n = y[i] - x[i];
            pn += std::norm(n);
            pi += n.real() * n.real();
        }
        pn /= static_cast<double>(x.size());
        pi /= static_cast<double>(x.size());
        CHECK(pn == doctest::Approx(1.0).epsilon(0.03));
        CHECK(pi == doctest::Approx(0.5).epsilon(0.03));
        CHECK(add_awgn(x, 7.0, 99) == add_awgn(x, 7.0, 99));
        CHECK(add_awgn(x, 7.0, 99) != add_awgn(x, 7.0, 100));

        const std::vector<cplx> zeros(16, cplx(0.0, 0.0));
        try {
            add_awgn(zeros, 10.0, 1);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Numeric);
        }
    }

    TEST_CASE("synthesize_frame is a pure function of its seed")
    {
        ImpairmentParams p{0.3, -4.0, 0.05, 3.1, 12.0};
        const ModulationScheme s{ModulationFamily::Qam, 32};
        const auto a = synthesize_frame(s, p, 1024, 1234);
        const auto b = synthesize_frame(s, p, 1024, 1234);
        const auto c = synthesize_frame(s, p, 1024, 1235);
        CHECK(a.samples == b.samples);
        CHECK(a.samples != c.samples);
        CHECK(a.samples.size() == 1024);
        for (const auto& v : a.samples)
            CHECK(std::isfinite(v.real()));
        CHECK(a.truth.alpha == 0.3);
    }

    TEST_CASE("imbalance is applied before the frequency offset")
    {
        const ModulationScheme s{ModulationFamily::Qam, 16};
        ImpairmentParams plain;
        plain.sps = 2.5;
        ImpairmentParams imp = plain;
        imp.alpha = 0.4;
        imp.theta_deg = 6.0;
        imp.freq_offset = 0.031;
        const auto base = synthesize_frame_detailed(s, plain, 512, 77).clean;
        const auto full = synthesize_frame_detailed(s, imp, 512, 77).clean;
        const auto expect = apply_iq_imbalance(base, imp.alpha, imp.theta_deg);
        // full[n] = expect[n] e^{j(phi0 + 2 pi f n)}: a pure rotation advancing 2 pi f per sample.
        const cplx r0 = full[0] / expect[0];
        CHECK(std::abs(std::abs(r0) - 1.0) < 1e-9);
        for (std::size_t n = 0; n < full.size(); ++n) {
            const cplx rot = r0 * std::polar(1.0, 2.0 * std::numbers::pi * imp.freq_offset * static_cast<double>(n));
            CHECK(std::abs(full[n] - expect[n] * rot) < 1e-9);
        }
    }

    TEST_CASE("per-frame SNR averages to the requested value")
    {
        const ModulationScheme s{ModulationFamily::Qam, 64};
        double sum_db = 0.0;
        const int frames = 10000;
        for (int i = 0; i < frames; ++i) {
            ImpairmentParams p;
            p.sps = 2.0 + 0.3 * (i % 7);
            p.snr_db = 10.0;
            p.alpha = 0.2;
            const auto sf = synthesize_frame_detailed(s, p, 512, static_cast<std::uint64_t>(i));
            double ps = 0.0, pn = 0.0;
            for (std::size_t n = 0; n < sf.clean.size(); ++n) {
                ps += std::norm(sf.clean[n]);
                pn += std::norm(sf.frame.samples[n] - sf.clean[n]);
            }
            sum_db += 10.0 * std::log10(ps / pn);
        }
        CHECK(sum_db / frames == doctest::Approx(10.0).epsilon(0.02));
    }

    TEST_CASE("impairment validation")
    {
        ImpairmentParams p;
        p.alpha = 0.95;
        CHECK_THROWS_AS(p.validate(), Error);
        p.alpha = 0.0;
        p.snr_db = 40.0;
        CHECK_THROWS_AS(p.validate(), Error);
        p.snr_db = 10.0;
        p.sps = 1.0;
        CHECK_THROWS_AS(p.validate(), Error);
    }
}
