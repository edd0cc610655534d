#include "rfsei/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rfsei/error.hpp"
#include "rfsei/linalg.hpp"
#include "rfsei/rng.hpp"
#include "rfsei/simd/kernels.hpp"

namespace rfsei {

using nlohmann::json;

std::string to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    }
    return "unknown";
}

std::string to_string(Activation act) { return act == Activation::ReLU ? "relu" : "linear"; }

LayerConfig LayerConfig::conv(std::size_t filters, std::size_t kh, std::size_t kw, Activation a)
{
    LayerConfig l;
    l.kind = LayerKind::Conv2D;
    l.units = filters;
    l.kernel_h = kh;
    l.kernel_w = kw;
    l.activation = a;
    return l;
}

LayerConfig LayerConfig::max_pool(std::size_t ph, std::size_t pw)
{
    LayerConfig l;
    l.kind = LayerKind::MaxPool;
    l.kernel_h = ph;
    l.kernel_w = pw;
    return l;
}

LayerConfig LayerConfig::flatten()
{
    LayerConfig l;
    l.kind = LayerKind::Flatten;
    return l;
}

LayerConfig LayerConfig::dense(std::size_t units, Activation a)
{
    LayerConfig l;
    l.kind = LayerKind::Dense;
    l.units = units;
    l.activation = a;
    return l;
}

namespace layers {

Shape3 conv2d_output(const Shape3& in, const LayerConfig& cfg)
{
    require(cfg.kernel_h >= 1 && cfg.kernel_w >= 1 && cfg.stride_h >= 1 && cfg.stride_w >= 1, ErrorCode::Config,
            "convolution kernel and stride must be positive");
    require(in.h >= cfg.kernel_h && in.w >= cfg.kernel_w, ErrorCode::Config,
            "convolution kernel larger than its input");
    return {cfg.units, (in.h - cfg.kernel_h) / cfg.stride_h + 1, (in.w - cfg.kernel_w) / cfg.stride_w + 1};
}

Shape3 max_pool_output(const Shape3& in, const LayerConfig& cfg)
{
    require(cfg.kernel_h >= 1 && cfg.kernel_w >= 1, ErrorCode::Config, "pool size must be positive");
    require(in.h >= cfg.kernel_h && in.w >= cfg.kernel_w, ErrorCode::Config, "pool window larger than its input");
    return {in.c, in.h / cfg.kernel_h, in.w / cfg.kernel_w};
}

template <typename T>
void im2col(const T* x, const Shape3& in, const LayerConfig& cfg, T* cols)
{
    const Shape3 out = conv2d_output(in, cfg);
    const std::size_t q = out.h * out.w;
    for (std::size_t c = 0; c < in.c; ++c)
        for (std::size_t i = 0; i < cfg.kernel_h; ++i)
            for (std::size_t j = 0; j < cfg.kernel_w; ++j) {
                T* row = cols + ((c * cfg.kernel_h + i) * cfg.kernel_w + j) * q;
                for (std::size_t oy = 0; oy < out.h; ++oy) {
                    const T* src = x + (c * in.h + oy * cfg.stride_h + i) * in.w + j;
                    T* dst = row + oy * out.w;
                    if (cfg.stride_w == 1) {
                        std::copy(src, src + out.w, dst);
                    } else {
                        for (std::size_t ox = 0; ox < out.w; ++ox)
                            dst[ox] = src[ox * cfg.stride_w];
                    }
                }
            }
}

template <typename T>
void col2im_add(const T* cols, const Shape3& in, const LayerConfig& cfg, T* dx)
{
    const Shape3 out = conv2d_output(in, cfg);
    const std::size_t q = out.h * out.w;
    for (std::size_t c = 0; c < in.c; ++c)
        for (std::size_t i = 0; i < cfg.kernel_h; ++i)
            for (std::size_t j = 0; j < cfg.kernel_w; ++j) {
                const T* row = cols + ((c * cfg.kernel_h + i) * cfg.kernel_w + j) * q;
                for (std::size_t oy = 0; oy < out.h; ++oy) {
                    T* dst = dx + (c * in.h + oy * cfg.stride_h + i) * in.w + j;
                    const T* src = row + oy * out.w;
                    for (std::size_t ox = 0; ox < out.w; ++ox)
                        dst[ox * cfg.stride_w] += src[ox];
                }
            }
}

template <typename T>
void conv2d_forward(const T* x, const Shape3& in, const LayerConfig& cfg, const T* w, const T* b, T* y)
{
    const Shape3 out = conv2d_output(in, cfg);
    const std::size_t p = in.c * cfg.kernel_h * cfg.kernel_w;
    const std::size_t q = out.h * out.w;
    thread_local std::vector<T> cols;
    cols.resize(p * q);
    im2col(x, in, cfg, cols.data());
    for (std::size_t f = 0; f < out.c; ++f)
        std::fill(y + f * q, y + (f + 1) * q, b[f]);
    gemm<T>(Trans::No, Trans::No, out.c, q, p, w, cols.data(), y, true);
}

template <typename T>
void max_pool_forward(const T* x, const Shape3& in, const LayerConfig& cfg, T* y, std::uint32_t* argmax)
{
    const Shape3 out = max_pool_output(in, cfg);
    for (std::size_t c = 0; c < in.c; ++c)
        for (std::size_t oy = 0; oy < out.h; ++oy)
            for (std::size_t ox = 0; ox < out.w; ++ox) {
                std::size_t best = (c * in.h + oy * cfg.kernel_h) * in.w + ox * cfg.kernel_w;
                for (std::size_t i = 0; i < cfg.kernel_h; ++i)
                    for (std::size_t j = 0; j < cfg.kernel_w; ++j) {
                        const std::size_t idx = (c * in.h + oy * cfg.kernel_h + i) * in.w + ox * cfg.kernel_w + j;
                        if (x[idx] > x[best])
                            best = idx;
                    }
                const std::size_t o = (c * out.h + oy) * out.w + ox;
                y[o] = x[best];
                argmax[o] = static_cast<std::uint32_t>(best);
            }
}

template <typename T>
void max_pool_backward(const T* dy, std::size_t out_size, const std::uint32_t* argmax, T* dx)
{
    for (std::size_t o = 0; o < out_size; ++o)
        dx[argmax[o]] += dy[o];
}

template void im2col<float>(const float*, const Shape3&, const LayerConfig&, float*);
template void im2col<double>(const double*, const Shape3&, const LayerConfig&, double*);
template void col2im_add<float>(const float*, const Shape3&, const LayerConfig&, float*);
template void col2im_add<double>(const double*, const Shape3&, const LayerConfig&, double*);
template void conv2d_forward<float>(const float*, const Shape3&, const LayerConfig&, const float*, const float*,
                                    float*);
template void conv2d_forward<double>(const double*, const Shape3&, const LayerConfig&, const double*, const double*,
                                     double*);
template void max_pool_forward<float>(const float*, const Shape3&, const LayerConfig&, float*, std::uint32_t*);
template void max_pool_forward<double>(const double*, const Shape3&, const LayerConfig&, double*, std::uint32_t*);
template void max_pool_backward<float>(const float*, std::size_t, const std::uint32_t*, float*);
template void max_pool_backward<double>(const double*, std::size_t, const std::uint32_t*, double*);

}  // namespace layers

std::vector<Shape3> NetworkConfig::output_shapes() const
{
    std::vector<Shape3> shapes;
    Shape3 cur = input;
    bool flat = false;
    for (const auto& l : layers) {
        switch (l.kind) {
        case LayerKind::Conv2D:
            require(!flat, ErrorCode::Config, "convolution after flatten/dense");
            require(l.units > 0, ErrorCode::Config, "convolution needs at least one filter");
            cur = layers::conv2d_output(cur, l);
            break;
        case LayerKind::MaxPool:
            require(!flat, ErrorCode::Config, "max-pool after flatten/dense");
            cur = layers::max_pool_output(cur, l);
            break;
        case LayerKind::Flatten:
            cur = {cur.size(), 1, 1};
            flat = true;
            break;
        case LayerKind::Dense:
            require(flat, ErrorCode::Config, "dense layer must follow flatten");
            require(l.units > 0, ErrorCode::Config, "dense layer needs at least one unit");
            cur = {l.units, 1, 1};
            break;
        }
        shapes.push_back(cur);
    }
    return shapes;
}

void NetworkConfig::validate() const
{
    require(input.size() > 0, ErrorCode::Config, "input shape is empty");
    require(!layers.empty(), ErrorCode::Config, "network has no layers");
    require(std::isfinite(output_scale) && output_scale > 0.0, ErrorCode::Config, "output scale must be positive");
    output_shapes();
    const auto& head = layers.back();
    require(head.kind == LayerKind::Dense && head.units == 1 && head.activation == Activation::Linear,
            ErrorCode::Config, "final layer must be Dense(1) with linear activation");
}

std::size_t NetworkConfig::parameter_count() const
{
    const auto shapes = output_shapes();
    std::size_t n = 0;
    Shape3 prev = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.kind == LayerKind::Conv2D)
            n += l.units * prev.c * l.kernel_h * l.kernel_w + l.units;
        else if (l.kind == LayerKind::Dense)
            n += prev.size() * l.units + l.units;
        prev = shapes[i];
    }
    return n;
}

json NetworkConfig::to_json() const
{
    json ls = json::array();
    for (const auto& l : layers) {
        json e{{"kind", to_string(l.kind)}};
        switch (l.kind) {
        case LayerKind::Conv2D:
            e["filters"] = l.units;
            e["kernel"] = {l.kernel_h, l.kernel_w};
            e["stride"] = {l.stride_h, l.stride_w};
            e["activation"] = to_string(l.activation);
            break;
        case LayerKind::MaxPool: e["size"] = {l.kernel_h, l.kernel_w}; break;
        case LayerKind::Flatten: break;
        case LayerKind::Dense:
            e["units"] = l.units;
            e["activation"] = to_string(l.activation);
            break;
        }
        ls.push_back(e);
    }
    return json{{"input", {input.c, input.h, input.w}}, {"layers", ls}, {"output_scale", output_scale}};
}

NetworkConfig NetworkConfig::from_json(const json& j)
{
    NetworkConfig cfg;
    try {
        const auto in = j.at("input").get<std::vector<std::size_t>>();
        require(in.size() == 3, ErrorCode::Config, "input shape must be [channels, height, width]");
        cfg.input = {in[0], in[1], in[2]};
        cfg.output_scale = j.value("output_scale", 1.0);
        auto act = [](const json& e) {
            const auto a = e.value("activation", std::string("relu"));
            if (a == "relu")
                return Activation::ReLU;
            if (a == "linear")
                return Activation::Linear;
            fail(ErrorCode::Config, "unknown activation '" + a + "'");
        };
        for (const auto& e : j.at("layers")) {
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "conv2d") {
                const auto k = e.at("kernel").get<std::vector<std::size_t>>();
                require(k.size() == 2, ErrorCode::Config, "kernel must be [height, width]");
                auto l = LayerConfig::conv(e.at("filters").get<std::size_t>(), k[0], k[1], act(e));
                if (e.contains("stride")) {
                    const auto s = e.at("stride").get<std::vector<std::size_t>>();
                    require(s.size() == 2, ErrorCode::Config, "stride must be [height, width]");
                    l.stride_h = s[0];
                    l.stride_w = s[1];
                }
                cfg.layers.push_back(l);
            } else if (kind == "maxpool") {
                const auto s = e.at("size").get<std::vector<std::size_t>>();
                require(s.size() == 2, ErrorCode::Config, "pool size must be [height, width]");
                cfg.layers.push_back(LayerConfig::max_pool(s[0], s[1]));
            } else if (kind == "flatten") {
                cfg.layers.push_back(LayerConfig::flatten());
            } else if (kind == "dense") {
                cfg.layers.push_back(LayerConfig::dense(e.at("units").get<std::size_t>(), act(e)));
            } else {
                fail(ErrorCode::Config, "unknown layer kind '" + kind + "'");
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed network config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

NetworkConfig NetworkConfig::estimator(std::size_t frame_len, bool max_pool)
{
    NetworkConfig cfg;
    cfg.input = {1, 2, frame_len};
    cfg.layers.push_back(LayerConfig::conv(64, 1, 8));
    cfg.layers.push_back(LayerConfig::conv(16, 2, 4));
    if (max_pool)
        cfg.layers.push_back(LayerConfig::max_pool(1, 2));
    cfg.layers.push_back(LayerConfig::flatten());
    cfg.layers.push_back(LayerConfig::dense(256));
    cfg.layers.push_back(LayerConfig::dense(128));
    cfg.layers.push_back(LayerConfig::dense(64));
    cfg.layers.push_back(LayerConfig::dense(1, Activation::Linear));
    return cfg;
}

template <typename T>
Network<T>::Network(NetworkConfig config) : config_(std::move(config))
{
    config_.validate();
    shapes_ = config_.output_shapes();
    Shape3 prev = config_.input;
    for (std::size_t i = 0; i < config_.layers.size(); ++i) {
        const auto& l = config_.layers[i];
        if (l.kind == LayerKind::Conv2D) {
            param_index_.push_back(static_cast<int>(params_.size()));
            params_.emplace_back(std::vector<std::size_t>{l.units, prev.c, l.kernel_h, l.kernel_w});
            params_.emplace_back(std::vector<std::size_t>{l.units});
        } else if (l.kind == LayerKind::Dense) {
            param_index_.push_back(static_cast<int>(params_.size()));
            params_.emplace_back(std::vector<std::size_t>{prev.size(), l.units});
            params_.emplace_back(std::vector<std::size_t>{l.units});
        } else {
            param_index_.push_back(-1);
        }
        prev = shapes_[i];
    }
}

template <typename T>
std::size_t Network<T>::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_)
        n += p.size();
    return n;
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed)
{
    auto rng = make_rng(seed);
    Shape3 prev = config_.input;
    for (std::size_t i = 0; i < config_.layers.size(); ++i) {
        const auto& l = config_.layers[i];
        const int pi = param_index_[i];
        if (pi >= 0) {
            double fan_in = 0.0;
            double fan_out = 0.0;
            if (l.kind == LayerKind::Conv2D) {
                fan_in = static_cast<double>(prev.c * l.kernel_h * l.kernel_w);
                fan_out = static_cast<double>(l.units * l.kernel_h * l.kernel_w);
            } else {
                fan_in = static_cast<double>(prev.size());
                fan_out = static_cast<double>(l.units);
            }
            const double limit = l.activation == Activation::ReLU ? std::sqrt(6.0 / fan_in)
                                                                  : std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (auto& v : params_[static_cast<std::size_t>(pi)].data())
                v = static_cast<T>(dist(rng));
            params_[static_cast<std::size_t>(pi) + 1].fill(T{});
        }
        prev = shapes_[i];
    }
}

namespace {

template <typename T>
void apply_activation(Activation a, std::span<T> v)
{
    if (a != Activation::ReLU)
        return;
    if constexpr (std::is_same_v<T, float>) {
        simd::kernels().relu(v.size(), v.data());
    } else {
        for (auto& x : v)
            x = x > T{} ? x : T{};
    }
}

template <typename T>
void activation_backward(Activation a, std::span<const T> out, std::span<T> grad)
{
    if (a != Activation::ReLU)
        return;
    if constexpr (std::is_same_v<T, float>) {
        simd::kernels().relu_backward(grad.size(), out.data(), grad.data());
    } else {
        for (std::size_t i = 0; i < grad.size(); ++i)
            if (!(out[i] > T{}))
                grad[i] = T{};
    }
}

}  // namespace

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, ForwardCache<T>* cache) const
{
    const auto& in = config_.input;
    require(batch.rank() == 4 && batch.dim(1) == in.c && batch.dim(2) == in.h && batch.dim(3) == in.w,
            ErrorCode::Shape, "batch shape does not match the network input");
    const std::size_t bsz = batch.dim(0);

    std::vector<Tensor<T>> local;
    std::vector<Tensor<T>>& outs = cache ? cache->outputs : local;
    outs.assign(config_.layers.size(), Tensor<T>());
    std::vector<std::vector<std::uint32_t>> local_argmax;
    auto& argmax = cache ? cache->argmax : local_argmax;
    argmax.assign(config_.layers.size(), {});
    if (cache)
        cache->input = batch;

    const Tensor<T>* cur = &batch;
    Shape3 prev = in;
    for (std::size_t li = 0; li < config_.layers.size(); ++li) {
        const auto& l = config_.layers[li];
        const Shape3 os = shapes_[li];
        Tensor<T> out(std::vector<std::size_t>{bsz, os.c, os.h, os.w});
        switch (l.kind) {
        case LayerKind::Conv2D: {
            const auto& w = params_[static_cast<std::size_t>(param_index_[li])];
            const auto& b = params_[static_cast<std::size_t>(param_index_[li]) + 1];
            for (std::size_t s = 0; s < bsz; ++s)
                layers::conv2d_forward(cur->ptr() + s * prev.size(), prev, l, w.ptr(), b.ptr(),
                                       out.ptr() + s * os.size());
            break;
        }
        case LayerKind::MaxPool: {
            argmax[li].resize(bsz * os.size());
            for (std::size_t s = 0; s < bsz; ++s)
                layers::max_pool_forward(cur->ptr() + s * prev.size(), prev, l, out.ptr() + s * os.size(),
                                         argmax[li].data() + s * os.size());
            if (!cache)
                argmax[li].clear();
            break;
        }
        case LayerKind::Flatten: std::copy(cur->ptr(), cur->ptr() + cur->size(), out.ptr()); break;
        case LayerKind::Dense: {
            const auto& w = params_[static_cast<std::size_t>(param_index_[li])];
            const auto& b = params_[static_cast<std::size_t>(param_index_[li]) + 1];
            for (std::size_t s = 0; s < bsz; ++s)
                std::copy(b.ptr(), b.ptr() + os.c, out.ptr() + s * os.c);
            gemm<T>(Trans::No, Trans::No, bsz, os.c, prev.size(), cur->ptr(), w.ptr(), out.ptr(), true);
            break;
        }
        }
        apply_activation(l.activation, out.data());
        outs[li] = std::move(out);
        cur = &outs[li];
        prev = os;
        // Inference does not need earlier activations.
        if (!cache && li > 0)
            outs[li - 1] = Tensor<T>();
    }
    Tensor<T> result(std::vector<std::size_t>{bsz});
    std::copy(cur->ptr(), cur->ptr() + bsz, result.ptr());
    return result;
}

template <typename T>
LossAndGradients<T> Network<T>::backward(const ForwardCache<T>& cache, std::span<const T> targets,
                                         bool want_input_gradient) const
{
    const std::size_t nl = config_.layers.size();
    require(cache.outputs.size() == nl, ErrorCode::Shape, "backward called without a matching forward pass");
    const std::size_t bsz = cache.input.dim(0);
    require(targets.size() == bsz, ErrorCode::Shape, "target count differs from batch size");

    LossAndGradients<T> res;
    res.gradients.reserve(params_.size());
    for (const auto& p : params_)
        res.gradients.emplace_back(p.shape());

    const auto& pred = cache.outputs.back();
    Tensor<T> grad(std::vector<std::size_t>{bsz, 1, 1, 1});
    double loss = 0.0;
    for (std::size_t s = 0; s < bsz; ++s) {
        const double diff = static_cast<double>(pred[s]) - static_cast<double>(targets[s]);
        loss += diff * diff;
        grad[s] = static_cast<T>(2.0 * diff / static_cast<double>(bsz));
    }
    res.loss = loss / static_cast<double>(bsz);

    thread_local std::vector<T> cols;
    thread_local std::vector<T> dcols;
    for (std::size_t li = nl; li-- > 0;) {
        const auto& l = config_.layers[li];
        const Shape3 os = shapes_[li];
        const Shape3 is = li == 0 ? config_.input : shapes_[li - 1];
        const Tensor<T>& in = li == 0 ? cache.input : cache.outputs[li - 1];
        const bool need_dx = li > 0 || want_input_gradient;

        activation_backward(l.activation, cache.outputs[li].data(), grad.data());
        Tensor<T> dx;
        if (need_dx)
            dx = Tensor<T>(std::vector<std::size_t>{bsz, is.c, is.h, is.w});

        switch (l.kind) {
        case LayerKind::Conv2D: {
            const std::size_t pidx = static_cast<std::size_t>(param_index_[li]);
            const auto& w = params_[pidx];
            auto& dw = res.gradients[pidx];
            auto& db = res.gradients[pidx + 1];
            const std::size_t p = is.c * l.kernel_h * l.kernel_w;
            const std::size_t q = os.h * os.w;
            cols.resize(p * q);
            dcols.resize(p * q);
            for (std::size_t s = 0; s < bsz; ++s) {
                const T* dy = grad.ptr() + s * os.size();
                layers::im2col(in.ptr() + s * is.size(), is, l, cols.data());
                gemm<T>(Trans::No, Trans::Yes, os.c, p, q, dy, cols.data(), dw.ptr(), true);
                for (std::size_t f = 0; f < os.c; ++f) {
                    T acc{};
                    for (std::size_t k = 0; k < q; ++k)
                        acc += dy[f * q + k];
                    db[f] += acc;
                }
                if (need_dx) {
                    gemm<T>(Trans::Yes, Trans::No, p, q, os.c, w.ptr(), dy, dcols.data(), false);
                    layers::col2im_add(dcols.data(), is, l, dx.ptr() + s * is.size());
                }
            }
            break;
        }
        case LayerKind::MaxPool:
            if (need_dx)
                for (std::size_t s = 0; s < bsz; ++s)
                    layers::max_pool_backward(grad.ptr() + s * os.size(), os.size(),
                                              cache.argmax[li].data() + s * os.size(), dx.ptr() + s * is.size());
            break;
        case LayerKind::Flatten:
            if (need_dx)
                std::copy(grad.ptr(), grad.ptr() + grad.size(), dx.ptr());
            break;
        case LayerKind::Dense: {
            const std::size_t pidx = static_cast<std::size_t>(param_index_[li]);
            const auto& w = params_[pidx];
            auto& dw = res.gradients[pidx];
            auto& db = res.gradients[pidx + 1];
            gemm<T>(Trans::Yes, Trans::No, is.size(), os.c, bsz, in.ptr(), grad.ptr(), dw.ptr(), true);
            for (std::size_t s = 0; s < bsz; ++s)
                for (std::size_t o = 0; o < os.c; ++o)
                    db[o] += grad[s * os.c + o];
            if (need_dx)
                gemm<T>(Trans::No, Trans::Yes, bsz, is.size(), os.c, grad.ptr(), w.ptr(), dx.ptr(), false);
            break;
        }
        }
        if (!need_dx)
            break;
        grad = std::move(dx);
    }
    if (want_input_gradient)
        res.input_gradient = std::move(grad);
    return res;
}

template <typename T>
LossAndGradients<T> Network<T>::loss_and_gradients(const Tensor<T>& batch, std::span<const T> targets,
                                                   bool want_input_gradient) const
{
    ForwardCache<T> cache;
    forward(batch, &cache);
    return backward(cache, targets, want_input_gradient);
}

template <typename T>
void RmsProp<T>::reset(const std::vector<Tensor<T>>& params)
{
    state.clear();
    for (const auto& p : params)
        state.emplace_back(p.shape());
}

template <typename T>
void RmsProp<T>::step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads)
{
    if (state.size() != params.size())
        reset(params);
    require(grads.size() == params.size(), ErrorCode::Shape, "gradient count differs from parameter count");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(grads[i].size() == params[i].size() && state[i].size() == params[i].size(), ErrorCode::Shape,
                "optimizer state shape mismatch");
        if constexpr (std::is_same_v<T, float>) {
            simd::kernels().rmsprop(params[i].size(), params[i].ptr(), grads[i].ptr(), state[i].ptr(),
                                    static_cast<float>(learning_rate), static_cast<float>(decay),
                                    static_cast<float>(epsilon));
        } else {
            for (std::size_t j = 0; j < params[i].size(); ++j) {
                const T g = grads[i][j];
                T& s = state[i][j];
                s = static_cast<T>(decay) * s + static_cast<T>(1.0 - decay) * g * g;
                params[i][j] -= static_cast<T>(learning_rate) * g / (std::sqrt(s) + static_cast<T>(epsilon));
            }
        }
    }
}

template <typename T>
Tensor<T> frames_to_batch(std::span<const float> interleaved, std::size_t frame_len, std::size_t first,
                          std::size_t count)
{
    require((first + count) * frame_len * 2 <= interleaved.size(), ErrorCode::Shape, "batch exceeds dataset");
    Tensor<T> batch(std::vector<std::size_t>{count, 1, 2, frame_len});
    for (std::size_t s = 0; s < count; ++s) {
        const float* src = interleaved.data() + (first + s) * frame_len * 2;
        T* i_row = batch.ptr() + s * 2 * frame_len;
        T* q_row = i_row + frame_len;
        for (std::size_t n = 0; n < frame_len; ++n) {
            i_row[n] = static_cast<T>(src[2 * n]);
            q_row[n] = static_cast<T>(src[2 * n + 1]);
        }
    }
    return batch;
}

template class Network<float>;
template class Network<double>;
template struct RmsProp<float>;
template struct RmsProp<double>;
template Tensor<float> frames_to_batch<float>(std::span<const float>, std::size_t, std::size_t, std::size_t);
template Tensor<double> frames_to_batch<double>(std::span<const float>, std::size_t, std::size_t, std::size_t);

}  // namespace rfsei
