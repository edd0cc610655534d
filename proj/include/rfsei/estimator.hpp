#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rfsei/dataset.hpp"
#include "rfsei/training.hpp"

namespace rfsei {

/// A block of frames handed to an estimator. `truth` is optional and only
/// consulted by the oracle estimators.
struct FrameBlock {
    std::span<const float> iq;  ///< interleaved I/Q, frame after frame
    std::size_t frame_len = 0;
    std::span<const FrameMeta> truth;

    std::size_t count() const { return frame_len == 0 ? 0 : iq.size() / (2 * frame_len); }
};

FrameBlock block_of(const Dataset& ds, std::size_t first, std::size_t count);

/// Maps frames to point estimates of one impairment, in label units.
class Estimator {
public:
    virtual ~Estimator() = default;
    virtual Target target() const = 0;
    virtual std::vector<double> estimate(const FrameBlock& frames) const = 0;
};

class NetworkEstimator final : public Estimator {
public:
    NetworkEstimator(std::shared_ptr<const NetworkModel> model, unsigned threads = 1);

    Target target() const override { return model_->target; }
    std::vector<double> estimate(const FrameBlock& frames) const override;
    const NetworkModel& model() const { return *model_; }

private:
    std::shared_ptr<const NetworkModel> model_;
    unsigned threads_;
};

/// Returns truth + N(bias, sigma^2), seeded per frame; sigma = 0 gives the exact truth.
class OracleEstimator final : public Estimator {
public:
    explicit OracleEstimator(Target target, double bias = 0.0, double sigma = 0.0, std::uint64_t seed = 0);

    Target target() const override { return target_; }
    std::vector<double> estimate(const FrameBlock& frames) const override;

private:
    Target target_;
    double bias_;
    double sigma_;
    std::uint64_t seed_;
};

}  // namespace rfsei
