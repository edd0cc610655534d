#include "rfsei/estimator.hpp"

#include <random>

#include "rfsei/error.hpp"
#include "rfsei/rng.hpp"

namespace rfsei {

FrameBlock block_of(const Dataset& ds, std::size_t first, std::size_t count)
{
    require(first + count <= ds.size(), ErrorCode::Shape, "frame block exceeds dataset");
    FrameBlock b;
    b.frame_len = ds.frame_len;
    b.iq = std::span<const float>(ds.iq).subspan(first * ds.frame_len * 2, count * ds.frame_len * 2);
    if (!ds.meta.empty())
        b.truth = std::span<const FrameMeta>(ds.meta).subspan(first, count);
    return b;
}

NetworkEstimator::NetworkEstimator(std::shared_ptr<const NetworkModel> model, unsigned threads)
    : model_(std::move(model)), threads_(threads)
{
    require(model_ != nullptr, ErrorCode::Config, "network estimator needs a model");
}

std::vector<double> NetworkEstimator::estimate(const FrameBlock& frames) const
{
    return model_->predict(frames.iq, frames.frame_len, threads_);
}

OracleEstimator::OracleEstimator(Target target, double bias, double sigma, std::uint64_t seed)
    : target_(target), bias_(bias), sigma_(sigma), seed_(seed)
{
    require(sigma >= 0.0, ErrorCode::Config, "oracle noise sigma must be >= 0");
}

std::vector<double> OracleEstimator::estimate(const FrameBlock& frames) const
{
    const std::size_t n = frames.count();
    require(frames.truth.size() == n, ErrorCode::Config, "oracle estimator needs per-frame ground truth");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = frames.truth[i];
        const double truth = target_ == Target::GainImbalance ? m.alpha : m.theta_deg;
        double noise = 0.0;
        if (sigma_ > 0.0) {
            auto rng = make_rng(derive_seed(seed_, m.seed));
            noise = std::normal_distribution<double>(0.0, sigma_)(rng);
        }
        out[i] = truth + bias_ + noise;
    }
    return out;
}

}  // namespace rfsei
