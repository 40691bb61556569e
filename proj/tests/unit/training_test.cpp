#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "chess_oracles.hpp"
#include "pawn/training.hpp"
#include "synthetic_records.hpp"

namespace pawn {
namespace {

std::vector<BoardTensor> random_boards(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BoardTensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(encode_board(testing::random_placement(rng)));
  return out;
}

TEST(Mae, Definition) {
  EXPECT_EQ(mae({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(mae({0, 0}, {100, -100}), 100.0);
  EXPECT_EQ(mae({5, -3, 8}, {1, 1, 1}), mae({8, 5, -3}, {1, 1, 1}));
  EXPECT_THROW(mae({1}, {1, 2}), std::invalid_argument);
  EXPECT_THROW(mae({}, {}), std::invalid_argument);
}

TEST(Mae, NonNegativeAndPermutationInvariant) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      a[static_cast<std::size_t>(i)] = nn::uniform(rng, -500, 500);
      b[static_cast<std::size_t>(i)] = nn::uniform(rng, -500, 500);
    }
    const double m = mae(a, b);
    EXPECT_GT(m, 0);
    std::vector<std::size_t> perm(20);
    for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pa, pb;
    for (auto i : perm) {
      pa.push_back(a[i]);
      pb.push_back(b[i]);
    }
    EXPECT_NEAR(mae(pa, pb), m, 1e-9);
  }
}

TEST(Batches, DropTrailingSingleton) {
  std::mt19937_64 rng(1);
  auto b = make_batches(9, 4, false, rng);
  ASSERT_EQ(b.size(), 2u);  // 4 + 4, the lone ninth record is dropped
  b = make_batches(10, 4, false, rng);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[2].size(), 2u);
  std::mt19937_64 r1(7), r2(7);
  EXPECT_EQ(make_batches(100, 16, true, r1), make_batches(100, 16, true, r2));
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.lr = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainingBoards, OnlyTrainingSplitPositions) {
  const auto recs = testing::linear_target_records(300, 3, 20);
  const auto m = split_by_game(recs, 0.8, 42);
  const auto boards = training_boards(recs, m);
  std::set<std::string> train_keys, val_keys;
  for (const auto& r : recs) {
    const auto b = encode_board(parse_fen(r.fen));
    (m.is_train(r.game_id) ? train_keys : val_keys).insert(std::string(b.data.begin(), b.data.end()));
  }
  ASSERT_FALSE(boards.empty());
  for (const auto& b : boards) {
    const std::string k(b.data.begin(), b.data.end());
    EXPECT_TRUE(train_keys.count(k));
  }
  EXPECT_EQ(boards.size(), train_keys.size());
}

TEST(Autoencoder, MemorizesOnePosition) {
  Autoencoder<float> ae(4, 32, 5);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 3e-3;
  const auto boards = random_boards(1, 2);
  const auto res = train_autoencoder(ae, boards, cfg);
  EXPECT_LT(res.curve.back().loss, 0.02);
  EXPECT_LT(res.curve.back().loss, res.curve.front().loss);
  EXPECT_EQ(res.curve.back().cell_accuracy, 1.0);
  EXPECT_EQ(res.curve.back().square_accuracy, 1.0);
}

TEST(Autoencoder, SameSeedSameCurve) {
  const auto boards = random_boards(12, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  auto run = [&] {
    Autoencoder<double> ae(4, 8, 11);
    std::vector<double> losses;
    for (const auto& e : train_autoencoder(ae, boards, cfg).curve) losses.push_back(e.loss);
    return losses;
  };
  EXPECT_EQ(run(), run());
}

TEST(Autoencoder, OverfitsSmallSet) {
  Autoencoder<float> ae(4, 64, 1);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 16;
  cfg.lr = 2e-3;
  cfg.stop_at_accuracy = 0.99;
  const auto boards = random_boards(40, 9);
  const auto res = train_autoencoder(ae, boards, cfg);
  EXPECT_GT(res.curve.back().cell_accuracy, 0.99);
  EXPECT_LT(res.curve.back().loss, res.curve.front().loss);
}

TEST(Autoencoder, RejectsEmptyAndDetectsDivergence) {
  Autoencoder<float> ae(4, 8, 1);
  EXPECT_THROW(train_autoencoder(ae, {}, TrainConfig{}), std::invalid_argument);
  TrainConfig cfg;
  cfg.epochs = 1;
  ae.parameters().back()->value[0] = std::numeric_limits<float>::quiet_NaN();  // final decoder bias
  EXPECT_THROW(train_autoencoder(ae, random_boards(4, 1), cfg), TrainingDiverged);
}

TEST(Predictor, LearnsLinearTargets) {
  const auto recs = testing::linear_target_records(512, 17);
  auto m = build_model<float>(ModelSpec::baseline(ModelKind::Mlp2), 3);
  m.normalizer = fit_normalizer(recs);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 32;
  double first = 0;
  bool reached = false;
  int epochs_needed = 0;
  train_predictor(m, recs, {}, cfg, [&](const PredictorEpoch& e) {
    if (e.epoch == 1) first = e.train_mae_cp;
    if (!reached && e.train_mae_cp < 0.1 * first) {
      reached = true;
      epochs_needed = e.epoch;
    }
  });
  EXPECT_TRUE(reached) << "first epoch MAE " << first;
  EXPECT_LE(epochs_needed, 100);
}

TEST(Predictor, ConstantTargetsConverge) {
  auto recs = testing::linear_target_records(128, 5);
  for (auto& r : recs) {
    r.value_cp = 250;
    r.eval_base_cp = 250;
  }
  auto m = build_model<float>(ModelSpec::baseline(ModelKind::Mlp1), 1);
  m.normalizer = {250, 100};
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 32;
  const auto res = train_predictor(m, recs, {}, cfg);
  EXPECT_LT(res.curve.back().train_mae_cp, 2.0);
}

TEST(Predictor, BitReproducibleAtDoublePrecision) {
  const auto recs = testing::linear_target_records(96, 8);
  auto run = [&] {
    auto m = build_model<double>(ModelSpec::mlp_cnn(4, 3, 8), 21);
    m.normalizer = fit_normalizer(recs);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.fine_tune_encoder = true;
    std::vector<double> out;
    for (const auto& e : train_predictor(m, recs, {}, cfg).curve) out.push_back(e.train_mae_cp);
    for (auto* p : m.state()) out.insert(out.end(), p->value.data.begin(), p->value.data.end());
    return out;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << "index " << i;
}

TEST(Predictor, FrozenEncoderIsUntouched) {
  const auto recs = testing::linear_target_records(64, 2);
  for (bool joint : {false, true}) {
    auto m = build_model<float>(ModelSpec::mlp_cnn(4, 3, 8), 4);
    m.normalizer = fit_normalizer(recs);
    std::vector<nn::AlignedVector<float>> before;
    for (auto* p : nn::state_of<float>(*m.encoder())) before.push_back(p->value.data);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.fine_tune_encoder = joint;
    train_predictor(m, recs, {}, cfg);
    std::vector<nn::AlignedVector<float>> after;
    for (auto* p : nn::state_of<float>(*m.encoder())) after.push_back(p->value.data);
    if (joint)
      EXPECT_NE(before, after);
    else
      EXPECT_EQ(before, after);
  }
}

TEST(Predictor, KeepsBestValidationEpoch) {
  const auto recs = testing::linear_target_records(400, 12, 20);
  const auto split = partition(recs, split_by_game(recs, 0.8, 1));
  auto m = build_model<float>(ModelSpec::baseline(ModelKind::Mlp3), 2);
  m.normalizer = fit_normalizer(split.train);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 32;
  cfg.lr = 2e-2;  // noisy enough that the last epoch is rarely the best
  cfg.checkpoint_path = (std::filesystem::temp_directory_path() / "pawn_best.pawn").string();
  const auto res = train_predictor(m, split.train, split.val, cfg);
  double best = 1e300;
  int best_epoch = 0;
  for (const auto& e : res.curve)
    if (*e.val_mae_cp < best) {
      best = *e.val_mae_cp;
      best_epoch = e.epoch;
    }
  EXPECT_EQ(res.best_epoch, best_epoch);
  const auto rep = evaluate(m, split.train, split.val);
  EXPECT_NEAR(rep.val_mae_cp, best, 1e-6 * best);
  auto saved = load_predictor(cfg.checkpoint_path);
  EXPECT_EQ(saved->metadata["checkpoint_epoch"], best_epoch);
  EXPECT_NEAR(evaluate(*saved, split.train, split.val).val_mae_cp, best, 1e-6 * best);
  std::filesystem::remove(cfg.checkpoint_path);
}

TEST(Evaluate, ZeroPredictorGivesMeanAbsoluteValue) {
  const auto recs = testing::linear_target_records(200, 6, 10);
  const auto split = partition(recs, split_by_game(recs, 0.8, 3));
  auto m = build_model<double>(ModelSpec::baseline(ModelKind::Mlp1), 1);
  m.normalizer = {0, 100};
  auto head = nn::parameters_of<double>(m.head());
  head[head.size() - 2]->value.fill(0);  // final weight
  head[head.size() - 1]->value.fill(0);  // final bias
  const auto rep = evaluate(m, split.train, split.val);
  double s = 0;
  for (const auto& r : split.val) s += std::abs(r.value_cp);
  EXPECT_NEAR(rep.val_mae_cp, s / double(split.val.size()), 1e-9);
  EXPECT_NEAR(rep.gap, rep.val_mae_cp - rep.train_mae_cp, 1e-12);
  EXPECT_EQ(rep.train_count + rep.val_count, recs.size());
  std::size_t n = 0;
  for (const auto& [k, v] : rep.per_kind) n += v.val_count;
  EXPECT_EQ(n, split.val.size());
  EXPECT_EQ(rep.to_json()["gap"], rep.gap);
  EXPECT_NE(rep.to_text().find("gap (val - train)"), std::string::npos);
  EXPECT_THROW(evaluate(m, split.train, {}), std::invalid_argument);
}

}  // namespace
}  // namespace pawn
