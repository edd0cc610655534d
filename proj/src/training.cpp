#include "rfsei/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "rfsei/binary_io.hpp"
#include "rfsei/error.hpp"
#include "rfsei/parallel.hpp"
#include "rfsei/rng.hpp"

namespace rfsei {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'R', 'F', 'P', 'M'};
constexpr std::uint32_t kFlagOptimizer = 1u << 0;
constexpr std::uint32_t kFlagBest = 1u << 1;
constexpr std::size_t kInferenceBatch = 256;

Tensor<float> gather_batch(const Dataset& ds, std::span<const std::size_t> idx)
{
    const std::size_t n = ds.frame_len;
    Tensor<float> batch(std::vector<std::size_t>{idx.size(), 1, 2, n});
    for (std::size_t s = 0; s < idx.size(); ++s) {
        const float* src = ds.iq.data() + idx[s] * n * 2;
        float* i_row = batch.ptr() + s * 2 * n;
        float* q_row = i_row + n;
        for (std::size_t k = 0; k < n; ++k) {
            i_row[k] = src[2 * k];
            q_row[k] = src[2 * k + 1];
        }
    }
    return batch;
}

/// Splits the batch into per-worker slices and sums their gradients weighted by slice size.
LossAndGradients<float> batch_gradients(const Network<float>& net, const Tensor<float>& batch,
                                        std::span<const float> targets, unsigned threads)
{
    const std::size_t b = batch.dim(0);
    const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(1, b / 16));
    if (workers <= 1)
        return net.loss_and_gradients(batch, targets);

    const std::size_t per = batch.size() / b;
    std::vector<LossAndGradients<float>> parts(workers);
    std::vector<std::size_t> lo(workers + 1);
    for (std::size_t w = 0; w <= workers; ++w)
        lo[w] = b * w / workers;
    parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t w) {
        const std::size_t cnt = lo[w + 1] - lo[w];
        Tensor<float> sub(std::vector<std::size_t>{cnt, batch.dim(1), batch.dim(2), batch.dim(3)});
        std::copy(batch.ptr() + lo[w] * per, batch.ptr() + lo[w + 1] * per, sub.ptr());
        parts[w] = net.loss_and_gradients(sub, targets.subspan(lo[w], cnt));
    });
    LossAndGradients<float> total = std::move(parts[0]);
    const double w0 = static_cast<double>(lo[1]) / static_cast<double>(b);
    total.loss *= w0;
    for (auto& g : total.gradients)
        for (auto& v : g.data())
            v = static_cast<float>(v * w0);
    for (std::size_t w = 1; w < workers; ++w) {
        const double wt = static_cast<double>(lo[w + 1] - lo[w]) / static_cast<double>(b);
        total.loss += parts[w].loss * wt;
        for (std::size_t p = 0; p < total.gradients.size(); ++p)
            for (std::size_t j = 0; j < total.gradients[p].size(); ++j)
                total.gradients[p][j] += static_cast<float>(parts[w].gradients[p][j] * wt);
    }
    return total;
}

}  // namespace

void TrainConfig::validate() const
{
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, ErrorCode::Config, "learning_rate must be >= 0");
    require(decay >= 0.0 && decay < 1.0, ErrorCode::Config, "decay must lie in [0, 1)");
    require(epsilon > 0.0, ErrorCode::Config, "epsilon must be positive");
    require(lr_gamma > 0.0 && lr_gamma <= 1.0, ErrorCode::Config, "lr_gamma must lie in (0, 1]");
    require(batch_size > 0, ErrorCode::Config, "batch_size must be positive");
    require(max_epochs > 0, ErrorCode::Config, "max_epochs must be positive");
    require(patience > 0, ErrorCode::Config, "patience must be positive");
}

json TrainConfig::to_json() const
{
    return json{{"learning_rate", learning_rate}, {"decay", decay},           {"epsilon", epsilon},
                {"lr_gamma", lr_gamma},           {"batch_size", batch_size}, {"max_epochs", max_epochs},
                {"patience", patience},           {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j)
{
    TrainConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.decay = j.value("decay", c.decay);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.lr_gamma = j.value("lr_gamma", c.lr_gamma);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed training config: ") + e.what());
    }
    c.validate();
    return c;
}

NetworkModel::NetworkModel(const NetworkConfig& config, const TrainConfig& train, Target t)
    : net(config), train_config(train), target(t)
{
    train.validate();
    net.initialize(derive_seed(train.seed, 0x1417));
    optimizer.learning_rate = train.learning_rate;
    optimizer.decay = train.decay;
    optimizer.epsilon = train.epsilon;
    optimizer.reset(net.parameters());
}

std::vector<double> NetworkModel::predict(std::span<const float> interleaved, std::size_t frame_len,
                                          unsigned threads) const
{
    require(frame_len == config().input.w && config().input.h == 2 && config().input.c == 1, ErrorCode::Shape,
            "frame length " + std::to_string(frame_len) + " does not match the network input");
    require(interleaved.size() % (2 * frame_len) == 0, ErrorCode::Shape, "partial frame in IQ buffer");
    const std::size_t count = interleaved.size() / (2 * frame_len);
    std::vector<double> out(count);
    const std::size_t n_batches = (count + kInferenceBatch - 1) / kInferenceBatch;
    const double scale = config().output_scale;
    parallel_for(n_batches, threads, [&](std::size_t bi) {
        const std::size_t first = bi * kInferenceBatch;
        const std::size_t cnt = std::min(kInferenceBatch, count - first);
        const auto batch = frames_to_batch<float>(interleaved, frame_len, first, cnt);
        const auto y = net.forward(batch);
        for (std::size_t s = 0; s < cnt; ++s)
            out[first + s] = static_cast<double>(y[s]) * scale;
    });
    return out;
}

std::vector<double> NetworkModel::predict(const Dataset& ds, std::size_t first, std::size_t count,
                                          unsigned threads) const
{
    require(first + count <= ds.size(), ErrorCode::Shape, "prediction range exceeds dataset");
    return predict(std::span<const float>(ds.iq).subspan(first * ds.frame_len * 2, count * ds.frame_len * 2),
                   ds.frame_len, threads);
}

double evaluate_mse(const NetworkModel& model, const Dataset& ds, std::size_t first, std::size_t count,
                    unsigned threads)
{
    require(count > 0, ErrorCode::Config, "empty evaluation range");
    const auto pred = model.predict(ds, first, count, threads);
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = pred[i] - static_cast<double>(ds.labels[first + i]);
        acc += d * d;
    }
    return acc / static_cast<double>(count);
}

void train(NetworkModel& model, const Dataset& ds, const EpochCallback& on_epoch)
{
    const auto& cfg = model.train_config;
    cfg.validate();
    require(ds.target == model.target, ErrorCode::Config,
            "dataset target '" + to_string(ds.target) + "' does not match model target '" + to_string(model.target) +
                "'");
    require(ds.frame_len == model.config().input.w, ErrorCode::Shape, "dataset frame length does not match network");
    require(ds.n_train > 0, ErrorCode::Config, "dataset has no training frames");
    if (model.finished)
        return;

    const double scale = model.config().output_scale;
    const float inv_scale = static_cast<float>(1.0 / scale);
    std::size_t since_best = model.history.size() - model.best_epoch;
    if (model.optimizer.state.size() != model.net.parameters().size())
        model.optimizer.reset(model.net.parameters());

    std::vector<std::size_t> perm(ds.n_train);
    std::vector<float> targets;
    while (model.history.size() < cfg.max_epochs && (model.best_epoch == 0 || since_best < cfg.patience)) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t epoch = model.history.size();
        model.optimizer.learning_rate = cfg.learning_rate * std::pow(cfg.lr_gamma, static_cast<double>(epoch));

        std::iota(perm.begin(), perm.end(), std::size_t{0});
        auto rng = make_rng(derive_seed(cfg.seed, epoch));
        std::shuffle(perm.begin(), perm.end(), rng);

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t first = 0; first < ds.n_train; first += cfg.batch_size) {
            const std::size_t cnt = std::min(cfg.batch_size, ds.n_train - first);
            const std::span<const std::size_t> idx(perm.data() + first, cnt);
            const auto batch = gather_batch(ds, idx);
            targets.resize(cnt);
            for (std::size_t s = 0; s < cnt; ++s)
                targets[s] = ds.labels[idx[s]] * inv_scale;
            auto lg = batch_gradients(model.net, batch, targets, cfg.threads);
            if (!std::isfinite(lg.loss))
                fail(ErrorCode::Numeric, "training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                             ", batch " + std::to_string(n_batches + 1) +
                                             "; lower the learning rate");
            model.optimizer.step(model.net.parameters(), lg.gradients);
            loss_sum += lg.loss;
            ++n_batches;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.learning_rate = model.optimizer.learning_rate;
        rec.train_loss = loss_sum / static_cast<double>(n_batches) * scale * scale;
        rec.val_loss = ds.n_val > 0 ? evaluate_mse(model, ds, ds.n_train, ds.n_val, cfg.threads) : rec.train_loss;
        if (!std::isfinite(rec.val_loss))
            fail(ErrorCode::Numeric, "validation loss is not finite at epoch " + std::to_string(rec.epoch));
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        model.history.push_back(rec);

        if (model.best_epoch == 0 || rec.val_loss < model.best_val_loss) {
            model.best_epoch = rec.epoch;
            model.best_val_loss = rec.val_loss;
            model.best_params = model.net.parameters();
            since_best = 0;
        } else {
            ++since_best;
        }
        if (on_epoch)
            on_epoch(model);
    }

    if (!model.best_params.empty())
        model.net.parameters() = model.best_params;
    model.best_params.clear();
    model.finished = true;
}

std::vector<std::uint8_t> serialize_checkpoint(const NetworkModel& model)
{
    json hist = json::array();
    for (const auto& h : model.history)
        hist.push_back({{"epoch", h.epoch},
                        {"train_loss", h.train_loss},
                        {"val_loss", h.val_loss},
                        {"learning_rate", h.learning_rate},
                        {"seconds", h.seconds}});
    const json meta{{"network", model.config().to_json()},
                    {"train", model.train_config.to_json()},
                    {"target", to_string(model.target)},
                    {"history", hist},
                    {"best_epoch", model.best_epoch},
                    {"best_val_loss", model.best_val_loss},
                    {"dataset_crc", model.dataset_crc},
                    {"finished", model.finished}};
    const std::string text = meta.dump();

    const auto& params = model.net.parameters();
    const bool has_opt = model.optimizer.state.size() == params.size();
    const bool has_best = model.best_params.size() == params.size();
    std::uint64_t floats = 0;
    for (const auto& p : params)
        floats += p.size();

    io::ByteWriter w;
    w.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    w.u32(kCheckpointFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.config().layers.size()));
    w.u32((has_opt ? kFlagOptimizer : 0u) | (has_best ? kFlagBest : 0u));
    w.u64(text.size());
    w.u32(static_cast<std::uint32_t>(params.size()));
    w.u32(0);
    w.u64(floats);
    w.pad_to(kCheckpointHeaderSize);
    w.text(text);
    for (const auto& p : params)
        w.f32_array(p.data());
    if (has_opt)
        for (const auto& s : model.optimizer.state)
            w.f32_array(s.data());
    if (has_best)
        for (const auto& b : model.best_params)
            w.f32_array(b.data());
    io::seal_with_crc(w);
    return std::move(w.buffer());
}

NetworkModel deserialize_checkpoint(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kCheckpointHeaderSize)
        fail(ErrorCode::Truncated, "checkpoint shorter than its 64-byte header");
    io::ByteReader r(bytes);
    if (std::memcmp(r.bytes(4).data(), kMagic, 4) != 0)
        fail(ErrorCode::Format, "not a checkpoint file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointFormatVersion)
        fail(ErrorCode::Version, "unsupported checkpoint format version " + std::to_string(version));
    const std::uint32_t n_layers = r.u32();
    const std::uint32_t flags = r.u32();
    const std::uint64_t text_len = r.u64();
    const std::uint32_t n_tensors = r.u32();
    r.u32();
    const std::uint64_t floats = r.u64();
    const std::uint64_t copies = 1 + ((flags & kFlagOptimizer) ? 1 : 0) + ((flags & kFlagBest) ? 1 : 0);
    const std::uint64_t expected = kCheckpointHeaderSize + text_len + copies * floats * 4 + 4;
    if (bytes.size() < expected)
        fail(ErrorCode::Truncated, "checkpoint truncated: " + std::to_string(bytes.size()) + " of " +
                                       std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        fail(ErrorCode::Format, "checkpoint has trailing bytes");
    io::verify_crc(bytes, kCheckpointHeaderSize);

    r.seek(kCheckpointHeaderSize);
    json meta;
    try {
        meta = json::parse(r.text(text_len));
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("checkpoint metadata is not valid JSON: ") + e.what());
    }

    NetworkModel m;
    try {
        m.net = Network<float>(NetworkConfig::from_json(meta.at("network")));
        m.train_config = TrainConfig::from_json(meta.at("train"));
        m.target = parse_target(meta.at("target").get<std::string>());
        for (const auto& h : meta.at("history")) {
            EpochRecord e;
            e.epoch = h.at("epoch").get<std::size_t>();
            e.train_loss = h.at("train_loss").get<double>();
            e.val_loss = h.at("val_loss").get<double>();
            e.learning_rate = h.at("learning_rate").get<double>();
            e.seconds = h.at("seconds").get<double>();
            m.history.push_back(e);
        }
        m.best_epoch = meta.at("best_epoch").get<std::size_t>();
        m.best_val_loss = meta.at("best_val_loss").get<double>();
        m.dataset_crc = meta.at("dataset_crc").get<std::uint32_t>();
        m.finished = meta.at("finished").get<bool>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("checkpoint metadata incomplete: ") + e.what());
    } catch (const Error& e) {
        fail(ErrorCode::Format, std::string("checkpoint metadata invalid: ") + e.what());
    }
    if (n_layers != m.config().layers.size() || n_tensors != m.net.parameters().size() ||
        floats != m.config().parameter_count())
        fail(ErrorCode::Format, "checkpoint header disagrees with its network config");

    for (auto& p : m.net.parameters())
        r.f32_array(p.storage());
    m.optimizer.learning_rate = m.train_config.learning_rate;
    m.optimizer.decay = m.train_config.decay;
    m.optimizer.epsilon = m.train_config.epsilon;
    m.optimizer.reset(m.net.parameters());
    if (flags & kFlagOptimizer)
        for (auto& s : m.optimizer.state)
            r.f32_array(s.storage());
    if (flags & kFlagBest) {
        m.best_params = m.net.parameters();
        for (auto& b : m.best_params)
            r.f32_array(b.storage());
    }
    return m;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkModel& model)
{
    io::write_file_atomic(path, serialize_checkpoint(model));
}

NetworkModel load_checkpoint(const std::filesystem::path& path)
{
    return deserialize_checkpoint(io::read_file(path));
}

json SearchSpace::to_json() const
{
    return json{{"conv1_filters", conv1_filters}, {"conv1_width", conv1_width}, {"conv2_filters", conv2_filters},
                {"dense_width", dense_width},     {"max_pool", max_pool}};
}

SearchSpace SearchSpace::from_json(const json& j)
{
    SearchSpace s;
    try {
        s.conv1_filters = j.value("conv1_filters", s.conv1_filters);
        s.conv1_width = j.value("conv1_width", s.conv1_width);
        s.conv2_filters = j.value("conv2_filters", s.conv2_filters);
        s.dense_width = j.value("dense_width", s.dense_width);
        s.max_pool = j.value("max_pool", s.max_pool);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed search space: ") + e.what());
    }
    require(!s.conv1_filters.empty() && !s.conv1_width.empty() && !s.conv2_filters.empty() && !s.dense_width.empty(),
            ErrorCode::Config, "every search dimension needs at least one choice");
    return s;
}

std::vector<SearchResult> random_search(const Dataset& ds, const SearchSpace& space, const TrainConfig& train_config,
                                        std::size_t trials, std::uint64_t seed, double output_scale)
{
    require(trials > 0, ErrorCode::Config, "random search needs at least one trial");
    auto rng = make_rng(seed);
    auto pick = [&rng](const std::vector<std::size_t>& v) {
        return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
    };
    std::vector<SearchResult> results;
    for (std::size_t t = 0; t < trials; ++t) {
        NetworkConfig cfg;
        cfg.input = {1, 2, ds.frame_len};
        cfg.output_scale = output_scale;
        cfg.layers.push_back(LayerConfig::conv(pick(space.conv1_filters), 1, pick(space.conv1_width)));
        cfg.layers.push_back(LayerConfig::conv(pick(space.conv2_filters), 2, 4));
        if (space.max_pool)
            cfg.layers.push_back(LayerConfig::max_pool(1, 2));
        cfg.layers.push_back(LayerConfig::flatten());
        std::size_t width = pick(space.dense_width);
        for (int d = 0; d < 3; ++d) {
            cfg.layers.push_back(LayerConfig::dense(width));
            width = std::max<std::size_t>(8, width / 2);
        }
        cfg.layers.push_back(LayerConfig::dense(1, Activation::Linear));

        NetworkModel model(cfg, train_config, ds.target);
        train(model, ds);
        results.push_back({cfg, model.best_val_loss});
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const SearchResult& a, const SearchResult& b) { return a.val_loss < b.val_loss; });
    return results;
}

}  // namespace rfsei
