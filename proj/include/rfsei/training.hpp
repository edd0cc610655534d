#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsei/dataset.hpp"
#include "rfsei/network.hpp"

namespace rfsei {

struct TrainConfig {
    double learning_rate = 1e-3;
    double decay = 0.9;
    double epsilon = 1e-8;
    /// Learning rate is multiplied by this after every epoch.
    double lr_gamma = 1.0;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
    /// Worker count for batch evaluation. 1 gives bit-reproducible training.
    unsigned threads = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  ///< mean batch MSE, label units
    double val_loss = 0.0;    ///< MSE over the validation split, label units
    double learning_rate = 0.0;
    double seconds = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Trainable estimator: weights, optimizer state and training metadata.
struct NetworkModel {
    Network<float> net;
    RmsProp<float> optimizer;
    TrainConfig train_config;
    Target target = Target::GainImbalance;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;  ///< 1-based; 0 before the first epoch
    double best_val_loss = 0.0;
    /// Weights of the best epoch while training is still in progress.
    std::vector<Tensor<float>> best_params;
    std::uint32_t dataset_crc = 0;
    bool finished = false;

    NetworkModel() = default;
    NetworkModel(const NetworkConfig& config, const TrainConfig& train, Target target);

    const NetworkConfig& config() const { return net.config(); }
    std::size_t epochs_completed() const { return history.size(); }

    /// Estimates in label units for frames [first, first + count) of `ds`.
    std::vector<double> predict(const Dataset& ds, std::size_t first, std::size_t count, unsigned threads = 1) const;
    std::vector<double> predict(std::span<const float> interleaved, std::size_t frame_len, unsigned threads = 1) const;
};

using EpochCallback = std::function<void(const NetworkModel&)>;

/// Mini-batch RMSProp over the shuffled training split with early stopping on the
/// validation loss. Continues from model.history when resuming. On return the model
/// holds the best-validation weights. NaN/Inf loss raises ErrorCode::Numeric.
void train(NetworkModel& model, const Dataset& ds, const EpochCallback& on_epoch = {});

/// MSE in label units over frames [first, first + count).
double evaluate_mse(const NetworkModel& model, const Dataset& ds, std::size_t first, std::size_t count,
                    unsigned threads = 1);

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr std::size_t kCheckpointHeaderSize = 64;

std::vector<std::uint8_t> serialize_checkpoint(const NetworkModel& model);
NetworkModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const NetworkModel& model);
NetworkModel load_checkpoint(const std::filesystem::path& path);

/// One candidate of the architecture search.
struct SearchResult {
    NetworkConfig config;
    double val_loss = 0.0;
};

struct SearchSpace {
    std::vector<std::size_t> conv1_filters = {16, 32, 64};
    std::vector<std::size_t> conv1_width = {4, 8, 16};
    std::vector<std::size_t> conv2_filters = {8, 16};
    std::vector<std::size_t> dense_width = {32, 64, 128, 256};
    bool max_pool = false;

    nlohmann::json to_json() const;
    static SearchSpace from_json(const nlohmann::json& j);
};

/// Random search over `trials` architectures, each trained with `train_config`.
/// Results are sorted by validation loss, best first.
std::vector<SearchResult> random_search(const Dataset& ds, const SearchSpace& space, const TrainConfig& train_config,
                                        std::size_t trials, std::uint64_t seed, double output_scale = 1.0);

}  // namespace rfsei
