// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "signpose/train.hpp"
#include "test_support.hpp"

using namespace signpose;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("signpose_test_train_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SynthSpec small_spec(std::uint64_t seed = 1) {
    SynthSpec s;
    s.n_classes = 4;
    s.frames = 12;
    s.seed = seed;
    return s;
}

TrainConfig small_config(std::uint64_t seed = 1) {
    TrainConfig cfg;
    PoseLstmConfig m;
    m.embed_dim = 12;
    m.hidden_dim = 10;
    cfg.model = m;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seq_len = 12;
    cfg.seed = seed;
    return cfg;
}

/// Brute-force top-k: fully sort class indices by (logit desc, index asc).
bool oracle_hit(std::span<const double> row, int label, std::size_t k) {
    std::vector<std::size_t> idx(row.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return row[a] != row[b] ? row[a] > row[b] : a < b;
    });
    return std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), static_cast<std::size_t>(label)) !=
           idx.begin() + static_cast<std::ptrdiff_t>(k);
}

}  // namespace

TEST(TopKAccuracy, Examples) {
    nd::Tensor<double> a({2, 2}, std::vector<double>{0.1, 0.9, 0.8, 0.2});
    const int la[] = {1, 0};
    EXPECT_EQ(top_k_accuracy(a, la, 1), 1.0);

    nd::Tensor<double> flat({1, 3}, std::vector<double>{0.5, 0.5, 0.5});
    const int l0[] = {0}, l2[] = {2};
    EXPECT_EQ(top_k_accuracy(flat, l0, 1), 1.0);
    EXPECT_EQ(top_k_accuracy(flat, l2, 1), 0.0);
    EXPECT_EQ(top_k_accuracy(flat, l2, 3), 1.0);

    // Class 7 has the 5th largest logit.
    nd::Tensor<double> ten({1, 10}, std::vector<double>{9, 8, 7, 6, 0, 0, 0, 5, 0, 0});
    const int l7[] = {7};
    EXPECT_EQ(top_k_accuracy(ten, l7, 5), 1.0);
    EXPECT_EQ(top_k_accuracy(ten, l7, 4), 0.0);
}

TEST(TopKAccuracy, Errors) {
    nd::Tensor<double> a({1, 3});
    const int ok[] = {0}, bad[] = {3}, neg[] = {-1};
    EXPECT_THROW(top_k_accuracy(a, ok, 0), std::invalid_argument);
    EXPECT_THROW(top_k_accuracy(a, ok, 4), std::invalid_argument);
    EXPECT_THROW(top_k_accuracy(a, bad, 1), std::out_of_range);
    EXPECT_THROW(top_k_accuracy(a, neg, 1), std::out_of_range);
    const int two[] = {0, 1};
    EXPECT_THROW(top_k_accuracy(a, two, 1), ShapeError);
}

TEST(TopKAccuracy, MatchesFullSortOracle) {
    nd::Rng rng(99);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.below(6), c = 1 + rng.below(12);
        nd::Tensor<double> logits({n, c});
        // Coarse values so that ties are common.
        for (auto& v : logits.values()) v = static_cast<double>(rng.below(4));
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng.below(c));
        const std::size_t k = 1 + rng.below(c);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += oracle_hit(logits.row(i), labels[i], k);
        ASSERT_EQ(top_k_accuracy(logits, labels, k), static_cast<double>(hits) / static_cast<double>(n))
            << "trial " << trial;
    }
}

TEST(EpochMetrics, RejectsInconsistentAccuracies) {
    EXPECT_THROW(EpochMetrics(1, MetricsSplit::Val, 0.5, 0.6, 0.5), std::logic_error);
    EXPECT_THROW(EpochMetrics(1, MetricsSplit::Val, 0.5, -0.1, 0.5), std::logic_error);
    EXPECT_THROW(EpochMetrics(1, MetricsSplit::Val, 0.5, 0.5, 1.1), std::logic_error);
    EXPECT_NO_THROW(EpochMetrics(1, MetricsSplit::Val, 0.5, 0.5, 0.5));
}

TEST(Config, JsonRoundTrip) {
    TrainConfig cfg = small_config(7);
    cfg.normalization = NormalizationStrategy::FaceCentered;
    cfg.augment->jitter_sigma = 0.02;
    cfg.cosine_decay = true;
    const auto back = train_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    EXPECT_EQ(back.seed, 7u);
    EXPECT_EQ(model_kind(back.model), "bilstm");

    cfg.augment.reset();
    cfg.model = PoseTransformerConfig{};
    EXPECT_EQ(to_json(train_config_from_json(to_json(cfg))), to_json(cfg));
    EXPECT_FALSE(train_config_from_json(to_json(cfg)).augment.has_value());
}

TEST(PrepareSample, ValidLengthAndMask) {
    auto spec = small_spec();
    spec.frames = 5;
    const auto seq = synth_gloss_sequence(spec, 0, 0);
    const auto p = prepare_sample(seq, NormalizationStrategy::PerFrameCenterOfMass, 8);
    EXPECT_EQ(p.valid, 5u);
    EXPECT_EQ(p.seq.size(), 8u);
    const auto b = pack_batch({&p.seq, &p.seq}, {p.valid, 3}, {0, 1});
    EXPECT_EQ(b.x.shape(), (nd::Shape{2, 8, kCoordsPerFrame}));
    EXPECT_EQ(b.mask, (nd::Mask{1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0}));
    EXPECT_THROW(pack_batch({&p.seq}, {0}, {0}), DegenerateInputError);

    PoseSequence faceless = seq;
    faceless.video_id = "nofaceclip";
    for (auto& f : faceless.frames) {
        f.presence[2] = false;
        for (std::size_t j = 42; j < kJointCount; ++j) f.set_joint(j, {0, 0, 0});
    }
    try {
        prepare_sample(faceless, NormalizationStrategy::GlobalNoseAnchored, 8);
        FAIL() << "expected DegenerateInputError";
    } catch (const DegenerateInputError& e) {
        EXPECT_NE(std::string(e.what()).find("nofaceclip"), std::string::npos);
    }
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
    const auto data = synthetic_dataset(small_spec(), 4, 2);
    auto cfg = small_config();
    cfg.epochs = 0;
    const auto r = train(data, cfg);
    EXPECT_TRUE(r.history.empty());
    EXPECT_EQ(r.best.epoch, 0);
    auto fresh = make_classifier<float>(r.best.config.model);
    fresh->init(cfg.seed);
    Checkpoint expected;
    capture_parameters(expected, *fresh);
    EXPECT_EQ(r.best.params, expected.params);
    EXPECT_EQ(r.best.classes, data.classes);
}

TEST(Train, SameSeedGivesIdenticalHistories) {
    const auto data = synthetic_dataset(small_spec(), 6, 3);
    const auto a = train(data, small_config(3));
    const auto b = train(data, small_config(3));
    ASSERT_EQ(a.history.size(), 6u);
    EXPECT_EQ(a.history, b.history);
    EXPECT_EQ(a.best.params, b.best.params);
    const auto c = train(data, small_config(4));
    EXPECT_NE(a.history, c.history);
}

TEST(Train, HistoryAlternatesSplitsAndTop5CoversTop1) {
    const auto data = synthetic_dataset(small_spec(), 6, 3);
    const auto r = train(data, small_config());
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        EXPECT_EQ(r.history[i].split, i % 2 ? MetricsSplit::Val : MetricsSplit::Train);
        EXPECT_EQ(r.history[i].epoch, static_cast<int>(i / 2) + 1);
        EXPECT_GE(r.history[i].top5, r.history[i].top1);
    }
    EXPECT_EQ(r.best.epoch, best_val(r.history)->epoch);
}

TEST(Train, TrainLossFallsOverFiveEpochs) {
    std::vector<double> drops;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto data = synthetic_dataset(small_spec(seed), 8, 2);
        auto cfg = small_config(seed);
        cfg.epochs = 5;
        const auto r = train(data, cfg);
        drops.push_back(r.history[0].loss - r.history[8].loss);
    }
    std::sort(drops.begin(), drops.end());
    EXPECT_GT(drops[1], 0.0);
}

TEST(Train, WritesCheckpointAndMetricsThatReproduceBestVal) {
    const auto dir = scratch_dir("ckpt");
    const auto data = synthetic_dataset(small_spec(), 6, 3);
    auto cfg = small_config();
    cfg.checkpoint_dir = dir.string();
    const auto r = train(data, cfg);

    std::ifstream lines(dir / "metrics.jsonl");
    std::vector<EpochMetrics> logged;
    for (std::string line; std::getline(lines, line);) logged.push_back(epoch_metrics_from_json(nlohmann::json::parse(line)));
    EXPECT_EQ(logged, r.history);

    const auto ck = load_checkpoint(dir / "best.ckpt");
    EXPECT_EQ(ck, r.best);
    const auto again = evaluate(ck, data.val);
    const auto best = *best_val(r.history);
    EXPECT_EQ(again.top1, best.top1);
    EXPECT_EQ(again.top5, best.top5);
    EXPECT_NEAR(again.loss, best.loss, 1e-6);
    fs::remove_all(dir);
}

TEST(Train, DivergenceKeepsTheLastGoodCheckpoint) {
    const auto dir = scratch_dir("diverge");
    const auto data = synthetic_dataset(small_spec(), 6, 3);
    auto cfg = small_config();
    cfg.lr = 1e38;  // float overflow within the first epoch
    cfg.epochs = 20;
    cfg.checkpoint_dir = dir.string();
    try {
        train(data, cfg);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos) << e.what();
    }
    EXPECT_NO_THROW(load_checkpoint(dir / "best.ckpt"));
    fs::remove_all(dir);
}

TEST(Train, RejectsEmptySplitsAndClassMismatch) {
    auto data = synthetic_dataset(small_spec(), 2, 1);
    auto cfg = small_config();
    auto no_val = data;
    no_val.val = {};
    EXPECT_THROW(train(no_val, cfg), TrainingError);
    auto wrong = cfg;
    std::get<PoseLstmConfig>(wrong.model).n_classes = 7;
    EXPECT_THROW(train(data, wrong), TrainingError);
}

TEST(Evaluate, OraclePerfectLinearModelScoresOne) {
    // Pooled feature 0 is the mean x coordinate of the first joint; the head
    // scores class 0 with +x and class 1 with -x.
    Checkpoint ck;
    ck.config.model = PoseLinearConfig{kCoordsPerFrame, 2};
    ck.config.normalization = NormalizationStrategy::Raw;
    ck.config.seq_len = 4;
    ck.classes = {"POS", "NEG"};
    auto model = make_classifier<float>(ck.config.model);
    for (auto* p : model->parameters()) p->value.fill(0.0f);
    auto& w = model->parameters()[0]->value;
    w.at(0, 0) = 1.0f;
    w.at(0, 1) = -1.0f;
    capture_parameters(ck, *model);

    SplitData data;
    for (double x : {0.7, -0.7}) {
        PoseSequence s;
        s.gloss = x > 0 ? "POS" : "NEG";
        s.frames.assign(4, signpose::testing::uniform_frame({x, 0.1, 0.0}));
        data.seqs.push_back(s);
        data.labels.push_back(x > 0 ? 0 : 1);
    }
    const auto m = evaluate(ck, data);
    EXPECT_EQ(m.top1, 1.0);
    EXPECT_EQ(m.top5, 1.0);
    EXPECT_THROW(evaluate(ck, SplitData{}), TrainingError);
}

TEST(Evaluate, RandomInitScoresChanceOnShuffledLabels) {
    // Labels are a seeded permutation of a balanced list, so predictions are
    // independent of them and top-1 is hypergeometric around 1/C.
    constexpr int kClasses = 10, kPerClass = 60;
    auto spec = small_spec();
    spec.n_classes = kClasses;
    auto data = synthetic_dataset(spec, 0, kPerClass);
    nd::Rng rng(5);
    rng.shuffle(data.val.labels);
    Checkpoint ck;
    ck.config = small_config();
    std::get<PoseLstmConfig>(ck.config.model).n_classes = kClasses;
    ck.classes = data.classes;
    auto model = make_classifier<float>(ck.config.model);
    model->init(11);
    capture_parameters(ck, *model);
    const double n = kClasses * kPerClass, p = 1.0 / kClasses;
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(evaluate(ck, data.val).top1, p, 3 * sigma);
}

TEST(Checkpoint, SerializationRoundTripAndCorruption) {
    const auto data = synthetic_dataset(small_spec(), 4, 2);
    auto cfg = small_config();
    cfg.epochs = 1;
    const auto r = train(data, cfg);
    ASSERT_FALSE(r.best.adam_m.empty());
    const auto bytes = serialize_checkpoint(r.best);
    EXPECT_EQ(deserialize_checkpoint(bytes), r.best);

    EXPECT_THROW(deserialize_checkpoint("XXXX" + bytes.substr(4)), std::runtime_error);
    EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
    EXPECT_THROW(deserialize_checkpoint(bytes + "x"), std::runtime_error);
    try {
        load_checkpoint("/nonexistent/best.ckpt");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/best.ckpt"), std::string::npos);
    }

    auto other = make_classifier<float>(PoseTransformerConfig{kCoordsPerFrame, 16, 2, 1, 8, 0.1, 4});
    EXPECT_THROW(restore_parameters(r.best, *other), std::invalid_argument);
    auto same = make_classifier<float>(r.best.config.model);
    nd::AdamState<float> adam(same->parameters(), {});
    restore_parameters(r.best, *same, &adam);
    EXPECT_EQ(adam.step, r.best.optimizer_step);
}

TEST(Ablation, DropoutAxisGivesFourRows) {
    const auto data = synthetic_dataset(small_spec(), 4, 2);
    auto cfg = small_config();
    cfg.epochs = 1;
    const auto rep = run_ablation(data, cfg, AblationAxis::Dropout, default_ablation_values(AblationAxis::Dropout));
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows[1].value, "0.1");
    const auto table = rep.table();
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
    EXPECT_EQ(table.rfind("dropout", 0), 0u);
    const auto csv = rep.csv();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_EQ(csv.rfind("dropout,top1,top5,best_epoch\n", 0), 0u);
}

TEST(Ablation, SingleValueAndConfigEdits) {
    const auto data = synthetic_dataset(small_spec(), 4, 2);
    auto cfg = small_config();
    cfg.epochs = 1;
    EXPECT_EQ(run_ablation(data, cfg, AblationAxis::Normalization, {"nose"}).rows.size(), 1u);
    EXPECT_THROW(run_ablation(data, cfg, AblationAxis::Normalization, {}), std::invalid_argument);

    EXPECT_EQ(ablation_config(cfg, AblationAxis::Normalization, "raw").normalization, NormalizationStrategy::Raw);
    EXPECT_THROW(ablation_config(cfg, AblationAxis::Normalization, "zscore"), std::invalid_argument);
    EXPECT_EQ(model_kind(ablation_config(cfg, AblationAxis::TemporalModel, "lstm").model), "lstm");
    EXPECT_EQ(model_kind(ablation_config(cfg, AblationAxis::TemporalModel, "transformer").model), "transformer");
    EXPECT_THROW(ablation_config(cfg, AblationAxis::TemporalModel, "gru"), std::invalid_argument);
    const auto d = ablation_config(cfg, AblationAxis::Dropout, "0.3");
    EXPECT_EQ(std::get<PoseLstmConfig>(d.model).dropout_rate, 0.3);
    EXPECT_THROW(ablation_config(cfg, AblationAxis::Dropout, "0.3x"), std::invalid_argument);
    EXPECT_THROW(ablation_config(cfg, AblationAxis::Dropout, "1"), std::invalid_argument);
    for (auto axis : {AblationAxis::Normalization, AblationAxis::TemporalModel, AblationAxis::Dropout})
        EXPECT_EQ(parse_ablation_axis(to_string(axis)), axis);
}

TEST(LoadDataset, UnreadableFileNamesThePath) {
    Manifest m;
    m.base_dir = "/nonexistent";
    m.entries = {{"v1", "A", "s", Split::Train, "missing.pose.json"}};
    try {
        load_dataset(m);
        FAIL();
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/missing.pose.json"), std::string::npos) << e.what();
    }
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
    std::vector<int> hit(100, 0);
    parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}
