// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0
//
// Data preparation, the training loop, evaluation, and ablation sweeps.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "signpose/augment.hpp"
#include "signpose/checkpoint.hpp"
#include "signpose/config.hpp"
#include "signpose/dataset.hpp"
#include "signpose/keypoints.hpp"
#include "signpose/models.hpp"
#include "signpose/ndcore/adam.hpp"
#include "signpose/normalize.hpp"

namespace signpose {

// ---------------------------------------------------------------------------
// Parallelism

/// Worker threads for data loading: hardware concurrency, capped by the
/// SIGNPOSE_THREADS environment variable when it holds a positive integer.
inline std::size_t worker_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SIGNPOSE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) n = std::min(n, static_cast<std::size_t>(v));
    }
    return n;
}

/// Runs f(i) for i in [0, n). Each index writes only its own slot, so the
/// result does not depend on scheduling. The first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    f(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Metrics

/// Number of classes ranked strictly ahead of `label` in a logit row. Ties
/// go to the lower class index.
template <class T>
std::size_t label_rank(std::span<const T> row, int label) {
    const T target = row[static_cast<std::size_t>(label)];
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] > target || (row[j] == target && j < static_cast<std::size_t>(label))) ++ahead;
    }
    return ahead;
}

template <class T>
double top_k_accuracy(const nd::Tensor<T>& logits, std::span<const int> labels, std::size_t k) {
    if (logits.rank() != 2) throw ShapeError("top_k_accuracy: logits must be [N, C]");
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    if (labels.size() != n) throw ShapeError("top_k_accuracy: label count does not match rows");
    if (k < 1 || k > c) throw std::invalid_argument("top_k_accuracy: k must lie in [1, C]");
    if (n == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw std::out_of_range("top_k_accuracy: label " + std::to_string(labels[i]) + " out of range");
        if (label_rank(logits.row(i), labels[i]) < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Datasets in memory

struct SplitData {
    std::vector<PoseSequence> seqs;
    std::vector<int> labels;

    std::size_t size() const { return seqs.size(); }
};

struct Dataset {
    std::vector<std::string> classes;  // label i is classes[i]
    SplitData train, val, test;

    SplitData& split(Split s) { return s == Split::Train ? train : s == Split::Val ? val : test; }
    const SplitData& split(Split s) const { return s == Split::Train ? train : s == Split::Val ? val : test; }
};

inline PoseSequence read_keypoint_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read keypoint file '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return parse_keypoint_file(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(e.kind(), path.string() + ": " + e.what(), e.frame());
    }
}

/// Sorted distinct glosses over every split.
inline std::vector<std::string> manifest_classes(const Manifest& m) {
    std::set<std::string> s;
    for (const auto& e : m.entries) s.insert(e.gloss);
    return {s.begin(), s.end()};
}

/// Reads every keypoint file named by the manifest. `classes` defaults to
/// manifest_classes(m); entries whose gloss is not listed are an error.
inline Dataset load_dataset(const Manifest& m, std::vector<std::string> classes = {}) {
    Dataset d;
    d.classes = classes.empty() ? manifest_classes(m) : std::move(classes);
    std::vector<int> labels(m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto it = std::find(d.classes.begin(), d.classes.end(), m.entries[i].gloss);
        if (it == d.classes.end())
            throw ManifestError("gloss '" + m.entries[i].gloss + "' of '" + m.entries[i].video_id +
                                "' is not among the model's classes");
        labels[i] = static_cast<int>(it - d.classes.begin());
    }
    std::vector<PoseSequence> seqs(m.entries.size());
    parallel_for(m.entries.size(), [&](std::size_t i) { seqs[i] = read_keypoint_file(m.resolve(m.entries[i])); });
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        auto& s = d.split(m.entries[i].split);
        s.seqs.push_back(std::move(seqs[i]));
        s.labels.push_back(labels[i]);
    }
    return d;
}

/// Instances [0, train) go to train, the next `val` to val, the next `test`
/// to test, for every class.
inline Dataset synthetic_dataset(const SynthSpec& spec, int train_per_class, int val_per_class,
                                 int test_per_class = 0) {
    spec.check();
    Dataset d;
    for (int c = 0; c < spec.n_classes; ++c) d.classes.push_back(synth_gloss_name(c));
    auto fill = [&](SplitData& s, int from, int count) {
        for (int c = 0; c < spec.n_classes; ++c)
            for (int i = from; i < from + count; ++i) {
                s.seqs.push_back(synth_gloss_sequence(spec, c, i));
                s.labels.push_back(c);
            }
    };
    fill(d.train, 0, train_per_class);
    fill(d.val, train_per_class, val_per_class);
    fill(d.test, train_per_class + val_per_class, test_per_class);
    return d;
}

// ---------------------------------------------------------------------------
// Preparation and batching

/// A normalized, fixed-length sequence and its number of real frames.
struct PreparedSample {
    PoseSequence seq;
    std::size_t valid = 0;
};

inline PreparedSample prepare_sample(const PoseSequence& seq, NormalizationStrategy norm, std::size_t seq_len) {
    try {
        PreparedSample p;
        p.seq = resample_temporal(normalize_sequence(seq, norm), seq_len);
        p.valid = resampled_valid_length(seq.frames.size(), seq_len);
        return p;
    } catch (const DegenerateInputError& e) {
        throw DegenerateInputError("'" + seq.video_id + "': " + e.what());
    }
}

inline std::vector<PreparedSample> prepare_split(const SplitData& s, NormalizationStrategy norm,
                                                 std::size_t seq_len) {
    std::vector<PreparedSample> out(s.size());
    parallel_for(s.size(), [&](std::size_t i) { out[i] = prepare_sample(s.seqs[i], norm, seq_len); });
    return out;
}

struct Batch {
    nd::Tensor<float> x;  // [B, T, 237]
    nd::Mask mask;        // B*T; padding frames are 0
    std::vector<int> labels;
};

/// Packs samples; `seqs[i]` may differ from prepared[i].seq (augmented copy).
inline Batch pack_batch(const std::vector<const PoseSequence*>& seqs, const std::vector<std::size_t>& valid,
                        std::vector<int> labels) {
    const std::size_t b = seqs.size(), t = seqs.front()->frames.size();
    Batch out{nd::Tensor<float>({b, t, kCoordsPerFrame}), nd::Mask(b * t, 0), std::move(labels)};
    for (std::size_t i = 0; i < b; ++i) {
        if (seqs[i]->frames.size() != t) throw ShapeError("pack_batch: sequences differ in length");
        if (valid[i] == 0) throw DegenerateInputError("pack_batch: sample " + std::to_string(i) + " is all padding");
        for (std::size_t s = 0; s < t; ++s) {
            out.mask[i * t + s] = s < valid[i] ? 1 : 0;
            const auto& c = seqs[i]->frames[s].coords;
            float* dst = &out.x.at(i, s, 0);
            for (std::size_t k = 0; k < kCoordsPerFrame; ++k) dst[k] = static_cast<float>(c[k]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalTally {
    double loss_sum = 0.0;
    std::size_t top1 = 0, top5 = 0, n = 0;

    void add(const nd::Tensor<float>& logits, std::span<const int> labels, double mean_loss) {
        const std::size_t k5 = std::min<std::size_t>(5, logits.dim(1));
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto r = label_rank(logits.row(i), labels[i]);
            top1 += r < 1;
            top5 += r < k5;
        }
        loss_sum += mean_loss * static_cast<double>(labels.size());
        n += labels.size();
    }

    EpochMetrics metrics(int epoch, MetricsSplit split) const {
        const double d = static_cast<double>(n);
        return {epoch, split, loss_sum / d, static_cast<double>(top1) / d, static_cast<double>(top5) / d};
    }
};

inline EpochMetrics evaluate_prepared(Classifier<float>& model, const std::vector<PreparedSample>& data,
                                      const std::vector<int>& labels, int epoch, MetricsSplit split,
                                      std::size_t batch_size = 64) {
    if (data.empty()) throw TrainingError("evaluate: split is empty");
    EvalTally tally;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t end = std::min(data.size(), start + batch_size);
        std::vector<const PoseSequence*> seqs;
        std::vector<std::size_t> valid;
        for (std::size_t i = start; i < end; ++i) {
            seqs.push_back(&data[i].seq);
            valid.push_back(data[i].valid);
        }
        Batch b = pack_batch(seqs, valid, {labels.begin() + static_cast<std::ptrdiff_t>(start),
                                           labels.begin() + static_cast<std::ptrdiff_t>(end)});
        const auto logits = model.infer(b.x, b.mask).logits;
        const auto ce = nd::softmax_cross_entropy(logits, b.labels);
        tally.add(logits, b.labels, static_cast<double>(ce.loss));
    }
    return tally.metrics(epoch, split);
}

inline std::unique_ptr<Classifier<float>> model_from_checkpoint(const Checkpoint& ck) {
    auto model = make_classifier<float>(ck.config.model);
    restore_parameters(ck, *model);
    return model;
}

/// Scores a checkpoint on one split of an in-memory dataset whose labels
/// follow ck.classes. No augmentation; normalization and T come from ck.
inline EpochMetrics evaluate(const Checkpoint& ck, const SplitData& data, MetricsSplit split = MetricsSplit::Val) {
    if (data.size() == 0) throw TrainingError("evaluate: split is empty");
    auto model = model_from_checkpoint(ck);
    const auto prepared = prepare_split(data, ck.config.normalization, ck.config.seq_len);
    return evaluate_prepared(*model, prepared, data.labels, ck.epoch, split, ck.config.batch_size);
}

inline EpochMetrics evaluate(const Checkpoint& ck, const Manifest& m, Split split) {
    Manifest sub;
    sub.base_dir = m.base_dir;
    for (const auto& e : m.entries)
        if (e.split == split) sub.entries.push_back(e);
    if (sub.entries.empty()) throw TrainingError("evaluate: split '" + std::string(to_string(split)) + "' is empty");
    const Dataset d = load_dataset(sub, ck.classes);
    const MetricsSplit ms = split == Split::Train ? MetricsSplit::Train
                            : split == Split::Val ? MetricsSplit::Val
                                                  : MetricsSplit::Test;
    return evaluate(ck, d.split(split), ms);
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
    Checkpoint best;  // parameters with the highest val top-1, full history
    std::vector<EpochMetrics> history;
};

/// Optional observer, called after every epoch with that epoch's train and
/// val metrics.
using EpochCallback = std::function<void(const EpochMetrics& train, const EpochMetrics& val)>;

namespace detail {

inline constexpr std::uint64_t kShuffleStream = 0x5u;
inline constexpr std::uint64_t kDropoutStream = 0xd0u;
inline constexpr std::uint64_t kAugmentStream = 0xa6u;

inline ModelConfig resolve_classes(ModelConfig cfg, std::size_t n) {
    std::visit(
        [&](auto& c) {
            if (c.n_classes == 0) c.n_classes = n;
            if (c.n_classes != n)
                throw TrainingError("model has " + std::to_string(c.n_classes) + " classes but the data has " +
                                    std::to_string(n));
        },
        cfg);
    return cfg;
}

inline void append_metrics_line(const std::filesystem::path& path, const EpochMetrics& m) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw std::runtime_error("cannot write metrics file '" + path.string() + "'");
    f << to_json(m).dump() << "\n";
}

}  // namespace detail

/// Trains on dataset.train, selects on dataset.val. When cfg.checkpoint_dir
/// is set, writes best.ckpt and metrics.jsonl there.
inline TrainResult train(const Dataset& data, TrainConfig cfg, const EpochCallback& on_epoch = {}) {
    cfg.check();
    if (data.train.size() == 0) throw TrainingError("train split is empty");
    if (data.val.size() == 0) throw TrainingError("val split is empty");
    cfg.model = detail::resolve_classes(cfg.model, data.classes.size());

    namespace fs = std::filesystem;
    fs::path dir;
    if (!cfg.checkpoint_dir.empty()) {
        dir = cfg.checkpoint_dir;
        fs::create_directories(dir);
        std::ofstream(dir / "metrics.jsonl", std::ios::trunc);
    }

    auto model = make_classifier<float>(cfg.model);
    model->init(cfg.seed);
    const auto params = model->parameters();
    nd::AdamState<float> adam(params, {cfg.lr, 0.9, 0.999, 1e-8});

    const auto train_set = prepare_split(data.train, cfg.normalization, cfg.seq_len);
    const auto val_set = prepare_split(data.val, cfg.normalization, cfg.seq_len);
    std::optional<AugmentConfig> aug = cfg.augment;
    if (aug) aug->seed = nd::derive_key(cfg.seed, {detail::kAugmentStream, aug->seed});

    TrainResult result;
    result.best.config = cfg;
    result.best.classes = data.classes;
    result.best.epoch = 0;
    capture_parameters(result.best, *model, &adam);
    double best_top1 = -1.0;

    auto save_best = [&] {
        result.best.history = result.history;
        if (!dir.empty()) save_checkpoint(result.best, dir / "best.ckpt");
    };

    const std::size_t n = train_set.size();
    const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const double total_steps = static_cast<double>(batches_per_epoch) * cfg.epochs;
    std::int64_t global_step = 0;
    std::vector<std::size_t> order(n);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        nd::Rng::derived(cfg.seed, {detail::kShuffleStream, static_cast<std::uint64_t>(epoch)}).shuffle(order);
        EvalTally tally;
        for (std::size_t bi = 0; bi < batches_per_epoch; ++bi) {
            const std::size_t start = bi * cfg.batch_size, end = std::min(n, start + cfg.batch_size);
            std::vector<PoseSequence> augmented;
            augmented.reserve(end - start);
            std::vector<const PoseSequence*> seqs;
            std::vector<std::size_t> valid;
            std::vector<int> labels;
            for (std::size_t p = start; p < end; ++p) {
                const std::size_t idx = order[p];
                if (aug) {
                    const std::uint64_t sample_index = static_cast<std::uint64_t>(epoch - 1) * n + idx;
                    augmented.push_back(augment_sequence(train_set[idx].seq, *aug, sample_index));
                    seqs.push_back(&augmented.back());
                } else {
                    seqs.push_back(&train_set[idx].seq);
                }
                valid.push_back(train_set[idx].valid);
                labels.push_back(data.train.labels[idx]);
            }
            Batch batch = pack_batch(seqs, valid, std::move(labels));

            nd::Rng drop = nd::Rng::derived(cfg.seed, {detail::kDropoutStream, static_cast<std::uint64_t>(epoch), bi});
            const auto out = model->forward(batch.x, batch.mask, true, drop);
            const auto ce = nd::softmax_cross_entropy(out.logits, batch.labels);
            if (!std::isfinite(static_cast<double>(ce.loss))) {
                save_best();
                throw TrainingError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(bi) + "; best checkpoint from epoch " +
                                    std::to_string(result.best.epoch) + " retained" +
                                    (dir.empty() ? std::string() : " in " + (dir / "best.ckpt").string()));
            }
            tally.add(out.logits, batch.labels, static_cast<double>(ce.loss));
            nd::zero_grads(params);
            model->backward(ce.grad);
            double lr_scale = 1.0;
            if (cfg.cosine_decay)
                lr_scale = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(global_step) / total_steps));
            nd::adam_step(params, adam, lr_scale);
            ++global_step;
        }
        const EpochMetrics train_m = tally.metrics(epoch, MetricsSplit::Train);
        const EpochMetrics val_m =
            evaluate_prepared(*model, val_set, data.val.labels, epoch, MetricsSplit::Val, cfg.batch_size);
        result.history.push_back(train_m);
        result.history.push_back(val_m);
        if (!dir.empty()) {
            detail::append_metrics_line(dir / "metrics.jsonl", train_m);
            detail::append_metrics_line(dir / "metrics.jsonl", val_m);
        }
        if (val_m.top1 > best_top1) {
            best_top1 = val_m.top1;
            result.best.epoch = epoch;
            capture_parameters(result.best, *model, &adam);
            save_best();
        }
        if (on_epoch) on_epoch(train_m, val_m);
    }
    save_best();
    return result;
}

inline TrainResult train(const Manifest& m, const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    return train(load_dataset(m), cfg, on_epoch);
}

/// Best validation metrics recorded in a history (highest top-1, earliest
/// epoch on ties).
inline std::optional<EpochMetrics> best_val(const std::vector<EpochMetrics>& history) {
    std::optional<EpochMetrics> best;
    for (const auto& m : history)
        if (m.split == MetricsSplit::Val && (!best || m.top1 > best->top1)) best = m;
    return best;
}

// ---------------------------------------------------------------------------
// Ablations

enum class AblationAxis { Normalization, TemporalModel, Dropout };

inline std::string to_string(AblationAxis a) {
    switch (a) {
        case AblationAxis::Normalization: return "norm";
        case AblationAxis::TemporalModel: return "temporal";
        case AblationAxis::Dropout: return "dropout";
    }
    return "?";
}

inline std::optional<AblationAxis> parse_ablation_axis(std::string_view s) {
    if (s == "norm") return AblationAxis::Normalization;
    if (s == "temporal") return AblationAxis::TemporalModel;
    if (s == "dropout") return AblationAxis::Dropout;
    return std::nullopt;
}

inline std::vector<std::string> default_ablation_values(AblationAxis a) {
    switch (a) {
        case AblationAxis::Normalization: return {"raw", "nose", "face", "com"};
        case AblationAxis::TemporalModel: return {"lstm", "bilstm", "transformer"};
        case AblationAxis::Dropout: return {"0", "0.1", "0.2", "0.3"};
    }
    return {};
}

/// `base` with one axis set to `value`.
inline TrainConfig ablation_config(const TrainConfig& base, AblationAxis axis, const std::string& value) {
    TrainConfig cfg = base;
    switch (axis) {
        case AblationAxis::Normalization: {
            const auto s = parse_normalization(value);
            if (!s) throw std::invalid_argument("unknown normalization '" + value + "' (raw|nose|face|com)");
            cfg.normalization = *s;
            break;
        }
        case AblationAxis::TemporalModel: {
            const std::size_t classes = n_classes(base.model);
            const std::size_t input = std::visit([](const auto& c) { return c.input_dim; }, base.model);
            if (value == "lstm" || value == "bilstm") {
                PoseLstmConfig c;
                if (const auto* l = std::get_if<PoseLstmConfig>(&base.model)) c = *l;
                c.bidirectional = value == "bilstm";
                c.n_classes = classes;
                c.input_dim = input;
                cfg.model = c;
            } else if (value == "transformer") {
                PoseTransformerConfig c;
                if (const auto* t = std::get_if<PoseTransformerConfig>(&base.model)) c = *t;
                c.n_classes = classes;
                c.input_dim = input;
                cfg.model = c;
            } else {
                throw std::invalid_argument("unknown temporal model '" + value + "' (lstm|bilstm|transformer)");
            }
            break;
        }
        case AblationAxis::Dropout: {
            std::size_t used = 0;
            double rate = 0.0;
            try {
                rate = std::stod(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != value.size() || !(rate >= 0.0 && rate < 1.0))
                throw std::invalid_argument("dropout value '" + value + "' must be a number in [0, 1)");
            std::visit(
                [&](auto& c) {
                    if constexpr (requires { c.dropout_rate; }) c.dropout_rate = rate;
                    else throw std::invalid_argument("the linear model has no dropout");
                },
                cfg.model);
            break;
        }
    }
    return cfg;
}

struct AblationRow {
    std::string value;
    EpochMetrics best;  // peak validation metrics of the run
};

struct AblationReport {
    AblationAxis axis = AblationAxis::Dropout;
    std::vector<AblationRow> rows;

    std::string header() const {
        switch (axis) {
            case AblationAxis::Normalization: return "normalization";
            case AblationAxis::TemporalModel: return "model";
            case AblationAxis::Dropout: return "dropout";
        }
        return "value";
    }

    std::string csv() const {
        std::ostringstream os;
        os << header() << ",top1,top5,best_epoch\n";
        os << std::setprecision(17);
        for (const auto& r : rows) os << r.value << "," << r.best.top1 << "," << r.best.top5 << "," << r.best.epoch << "\n";
        return os.str();
    }

    /// Fixed-width text table with accuracies in percent.
    std::string table() const {
        std::size_t w = header().size();
        for (const auto& r : rows) w = std::max(w, r.value.size());
        std::ostringstream os;
        os << std::left << std::setw(static_cast<int>(w)) << header() << "  " << std::right << std::setw(8) << "top-1"
           << "  " << std::setw(8) << "top-5" << "\n";
        os << std::string(w, '-') << "  " << std::string(8, '-') << "  " << std::string(8, '-') << "\n";
        os << std::fixed << std::setprecision(2);
        for (const auto& r : rows)
            os << std::left << std::setw(static_cast<int>(w)) << r.value << "  " << std::right << std::setw(7)
               << 100.0 * r.best.top1 << "%  " << std::setw(7) << 100.0 * r.best.top5 << "%\n";
        return os.str();
    }
};

/// One training run per value, all with base.seed. With a checkpoint_dir,
/// each run writes into <dir>/<axis>-<value>/.
inline AblationReport run_ablation(const Dataset& data, const TrainConfig& base, AblationAxis axis,
                                   const std::vector<std::string>& values,
                                   const std::function<void(const AblationRow&)>& on_row = {}) {
    if (values.empty()) throw std::invalid_argument("run_ablation: no values given");
    AblationReport report;
    report.axis = axis;
    for (const auto& v : values) {
        TrainConfig cfg = ablation_config(base, axis, v);
        if (!base.checkpoint_dir.empty())
            cfg.checkpoint_dir = (std::filesystem::path(base.checkpoint_dir) / (to_string(axis) + "-" + v)).string();
        const auto r = train(data, cfg);
        const auto best = best_val(r.history);
        AblationRow row{v, best ? *best : EpochMetrics(0, MetricsSplit::Val, 0.0, 0.0, 0.0)};
        if (on_row) on_row(row);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace signpose
