#pragma once

// Shared oracles for the unit tests and the acceptance binaries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rfsei/network.hpp"
#include "rfsei/rng.hpp"
#include "rfsei/signal_model.hpp"

namespace rfsei::testing {

/// Conv2D by direct summation over (filter, output row, output col, kernel taps).
inline std::vector<double> conv_reference(const std::vector<double>& x, const Shape3& in, const LayerConfig& cfg,
                                          const std::vector<double>& w, const std::vector<double>& b)
{
    const std::size_t ho = (in.h - cfg.kernel_h) / cfg.stride_h + 1;
    const std::size_t wo = (in.w - cfg.kernel_w) / cfg.stride_w + 1;
    std::vector<double> y(cfg.units * ho * wo);
    for (std::size_t f = 0; f < cfg.units; ++f)
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox) {
                double acc = b[f];
                for (std::size_t c = 0; c < in.c; ++c)
                    for (std::size_t i = 0; i < cfg.kernel_h; ++i)
                        for (std::size_t j = 0; j < cfg.kernel_w; ++j)
                            acc += w[((f * in.c + c) * cfg.kernel_h + i) * cfg.kernel_w + j] *
                                   x[(c * in.h + oy * cfg.stride_h + i) * in.w + ox * cfg.stride_w + j];
                y[(f * ho + oy) * wo + ox] = acc;
            }
    return y;
}

/// ReLU masks and max-pool routing of one forward pass. Finite differences are only
/// meaningful while this stays fixed.
inline std::vector<std::vector<std::uint32_t>> routing_signature(const Network<double>& net, const Tensor<double>& x)
{
    ForwardCache<double> cache;
    net.forward(x, &cache);
    std::vector<std::vector<std::uint32_t>> sig;
    const auto& layers = net.config().layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].kind == LayerKind::MaxPool)
            sig.push_back(cache.argmax[l]);
        if ((layers[l].kind == LayerKind::Conv2D || layers[l].kind == LayerKind::Dense) &&
            layers[l].activation == Activation::ReLU) {
            std::vector<std::uint32_t> mask;
            for (double v : cache.outputs[l].data())
                mask.push_back(v > 0.0 ? 1u : 0u);
            sig.push_back(std::move(mask));
        }
    }
    return sig;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  ///< perturbations that crossed a ReLU or max-pool kink
};

inline double relative_error(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-7);
}

/// Central finite differences of the batch MSE against backprop, for every parameter
/// and every input element.
inline GradCheck gradient_check(const NetworkConfig& cfg, std::uint64_t seed, std::size_t batch = 3,
                                double eps = 1e-3)
{
    Network<double> net(cfg);
    net.initialize(seed);
    auto rng = make_rng(derive_seed(seed, 77));
    std::normal_distribution<double> nd;
    for (auto& p : net.parameters())
        for (auto& v : p.data())
            v += 0.1 * nd(rng);  // non-zero biases too
    const Shape3 in = cfg.input;
    Tensor<double> x({batch, in.c, in.h, in.w});
    for (auto& v : x.data())
        v = nd(rng);
    std::vector<double> t(batch);
    for (auto& v : t)
        v = nd(rng);

    const auto lg = net.loss_and_gradients(x, t, true);
    const auto sig = routing_signature(net, x);
    GradCheck out;

    auto probe = [&](double& slot, double analytic) {
        const double w0 = slot;
        slot = w0 + eps;
        const double lp = net.loss_and_gradients(x, t).loss;
        const bool same_p = routing_signature(net, x) == sig;
        slot = w0 - eps;
        const double lm = net.loss_and_gradients(x, t).loss;
        const bool same_m = routing_signature(net, x) == sig;
        slot = w0;
        if (!same_p || !same_m) {
            ++out.skipped;
            return;
        }
        ++out.checked;
        out.max_rel_error = std::max(out.max_rel_error, relative_error((lp - lm) / (2.0 * eps), analytic));
    };

    for (std::size_t p = 0; p < net.parameters().size(); ++p)
        for (std::size_t j = 0; j < net.parameters()[p].size(); ++j)
            probe(net.parameters()[p][j], lg.gradients[p][j]);
    for (std::size_t j = 0; j < x.size(); ++j)
        probe(x[j], lg.input_gradient[j]);
    return out;
}

/// EVM of a clean capture: continuous matched filter at each symbol centre, then one
/// complex least-squares gain. Returns +inf when too few symbols are fully covered.
inline double evm_after_matched_filter(const SynthesizedFrame& sf, double sps)
{
    const auto& r = sf.frame.samples;
    const double t0 = sf.first_symbol_time;
    const double taps = 6.0;
    std::vector<cplx> y, x;
    for (std::size_t k = 0; k < sf.symbols.size(); ++k) {
        const double tk = static_cast<double>(k);
        const double first = (tk - taps - t0) * sps;
        const double last = (tk + taps - t0) * sps;
        if (first < 0.0 || last >= static_cast<double>(r.size()))
            continue;
        cplx acc = 0.0;
        for (auto n = static_cast<std::size_t>(std::ceil(first)); n <= static_cast<std::size_t>(last); ++n)
            acc += r[n] * rrc_pulse(tk - (t0 + static_cast<double>(n) / sps), kRrcRolloff);
        y.push_back(acc);
        x.push_back(sf.symbols[k]);
    }
    if (y.size() < 100)
        return std::numeric_limits<double>::infinity();
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += std::conj(y[i]) * x[i];
        den += std::norm(y[i]);
    }
    const cplx g = num / den;
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        err += std::norm(g * y[i] - x[i]);
        ref += std::norm(x[i]);
    }
    return std::sqrt(err / ref);
}

/// One small network per layer kind, each exercising that kind's backward pass.
struct LayerKindCase {
    const char* name;
    NetworkConfig config;
};

inline std::vector<LayerKindCase> layer_kind_cases()
{
    using L = LayerConfig;
    std::vector<LayerKindCase> cases;
    NetworkConfig c;

    c.input = {1, 2, 9};
    c.layers = {L::conv(3, 1, 3), L::conv(2, 2, 2, Activation::Linear), L::flatten(), L::dense(1, Activation::Linear)};
    cases.push_back({"conv2d", c});

    c.input = {2, 3, 7};
    c.layers = {L::conv(2, 2, 3, Activation::Linear), L::flatten(), L::dense(1, Activation::Linear)};
    c.layers[0].stride_w = 2;
    cases.push_back({"conv2d-strided", c});

    c.input = {1, 2, 10};
    c.layers = {L::conv(3, 1, 3, Activation::Linear), L::max_pool(1, 2), L::flatten(), L::dense(1, Activation::Linear)};
    cases.push_back({"maxpool", c});

    c.input = {2, 2, 3};
    c.layers = {L::flatten(), L::dense(1, Activation::Linear)};
    cases.push_back({"flatten", c});

    c.input = {1, 2, 4};
    c.layers = {L::flatten(), L::dense(5), L::dense(4, Activation::Linear), L::dense(1, Activation::Linear)};
    cases.push_back({"dense", c});
    return cases;
}

}  // namespace rfsei::testing
