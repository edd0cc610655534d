#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsei/tensor.hpp"

namespace rfsei {

enum class LayerKind { Conv2D, MaxPool, Flatten, Dense };
enum class Activation { ReLU, Linear };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

struct LayerConfig {
    LayerKind kind = LayerKind::Dense;
    std::size_t units = 0;  ///< Conv2D filter count or Dense width
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride_h = 1;  ///< Conv2D only; pooling windows never overlap
    std::size_t stride_w = 1;
    Activation activation = Activation::Linear;

    static LayerConfig conv(std::size_t filters, std::size_t kh, std::size_t kw, Activation a = Activation::ReLU);
    static LayerConfig max_pool(std::size_t ph, std::size_t pw);
    static LayerConfig flatten();
    static LayerConfig dense(std::size_t units, Activation a = Activation::ReLU);

    friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

/// Channels x height x width of one sample.
struct Shape3 {
    std::size_t c = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    std::size_t size() const noexcept { return c * h * w; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct NetworkConfig {
    /// One IQ frame is a 1 x 2 x N image: row 0 in-phase, row 1 quadrature.
    Shape3 input{1, 2, 1024};
    std::vector<LayerConfig> layers;
    /// Predictions in label units are raw network outputs times this factor.
    double output_scale = 1.0;

    /// Throws ErrorCode::Config unless shapes chain and the head is Dense(1, Linear).
    void validate() const;
    std::vector<Shape3> output_shapes() const;
    std::size_t parameter_count() const;

    nlohmann::json to_json() const;
    static NetworkConfig from_json(const nlohmann::json& j);

    /// Conv(64, 1x8) -> Conv(16, 2x4) -> [MaxPool(1x2)] -> Flatten -> Dense 256/128/64 -> Dense(1).
    static NetworkConfig estimator(std::size_t frame_len, bool max_pool);

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Single-sample layer primitives. Exposed for the reference-equivalence tests.
namespace layers {

Shape3 conv2d_output(const Shape3& in, const LayerConfig& cfg);
Shape3 max_pool_output(const Shape3& in, const LayerConfig& cfg);

/// cols[(c*kh + i)*kw + j][oy*Wo + ox] = x[c][oy*sh + i][ox*sw + j]
template <typename T>
void im2col(const T* x, const Shape3& in, const LayerConfig& cfg, T* cols);

template <typename T>
void col2im_add(const T* cols, const Shape3& in, const LayerConfig& cfg, T* dx);

/// y[F x Ho*Wo] = W[F x C*kh*kw] * im2col(x) + b, before activation.
template <typename T>
void conv2d_forward(const T* x, const Shape3& in, const LayerConfig& cfg, const T* w, const T* b, T* y);

template <typename T>
void max_pool_forward(const T* x, const Shape3& in, const LayerConfig& cfg, T* y, std::uint32_t* argmax);

/// dx must be zeroed by the caller; gradient goes only to the recorded argmax inputs.
template <typename T>
void max_pool_backward(const T* dy, std::size_t out_size, const std::uint32_t* argmax, T* dx);

}  // namespace layers

/// Cached activations of one training forward pass.
template <typename T>
struct ForwardCache {
    Tensor<T> input;
    std::vector<Tensor<T>> outputs;                  ///< post-activation output of each layer
    std::vector<std::vector<std::uint32_t>> argmax;  ///< max-pool routing per layer
};

template <typename T>
struct LossAndGradients {
    double loss = 0.0;                 ///< mean squared error over the batch
    std::vector<Tensor<T>> gradients;  ///< aligned with Network::parameters()
    Tensor<T> input_gradient;          ///< filled only on request
};

/// Convolutional regressor over a fixed layer graph. Parameters are stored as
/// (weight, bias) pairs per trainable layer: Conv2D weight [F, C, kh, kw],
/// Dense weight [in, out].
template <typename T>
class Network {
public:
    Network() = default;
    explicit Network(NetworkConfig config);  ///< all parameters zero

    const NetworkConfig& config() const noexcept { return config_; }

    /// He-uniform weights for ReLU layers, Glorot-uniform for linear layers, zero biases.
    void initialize(std::uint64_t seed);

    std::vector<Tensor<T>>& parameters() noexcept { return params_; }
    const std::vector<Tensor<T>>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const;

    /// batch [B, C, H, W] -> [B] raw outputs. Reentrant; fills `cache` when given.
    Tensor<T> forward(const Tensor<T>& batch, ForwardCache<T>* cache = nullptr) const;

    /// Gradients of mean((y_hat - target)^2) after forward(batch, &cache).
    LossAndGradients<T> backward(const ForwardCache<T>& cache, std::span<const T> targets,
                                 bool want_input_gradient = false) const;

    LossAndGradients<T> loss_and_gradients(const Tensor<T>& batch, std::span<const T> targets,
                                           bool want_input_gradient = false) const;

    template <typename U>
    Network<U> cast() const
    {
        Network<U> out(config_);
        for (std::size_t i = 0; i < params_.size(); ++i)
            for (std::size_t j = 0; j < params_[i].size(); ++j)
                out.parameters()[i][j] = static_cast<U>(params_[i][j]);
        return out;
    }

    /// Index of the weight tensor of `layer` in parameters(), or -1 if it has none.
    int parameter_index(std::size_t layer) const { return param_index_.at(layer); }

private:
    NetworkConfig config_;
    std::vector<Shape3> shapes_;
    std::vector<int> param_index_;
    std::vector<Tensor<T>> params_;
};

/// s <- decay*s + (1-decay)*g^2 ; w <- w - lr*g/(sqrt(s) + epsilon)
template <typename T>
struct RmsProp {
    double learning_rate = 1e-3;
    double decay = 0.9;
    double epsilon = 1e-8;
    std::vector<Tensor<T>> state;

    void reset(const std::vector<Tensor<T>>& params);
    void step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads);
};

/// Copies frames [first, first+count) of an interleaved IQ buffer into a [count, 1, 2, N] batch.
template <typename T>
Tensor<T> frames_to_batch(std::span<const float> interleaved, std::size_t frame_len, std::size_t first,
                          std::size_t count);

extern template class Network<float>;
extern template class Network<double>;
extern template struct RmsProp<float>;
extern template struct RmsProp<double>;

}  // namespace rfsei
