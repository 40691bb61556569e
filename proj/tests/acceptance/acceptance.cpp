// Acceptance run: one PASS/FAIL/SKIP line per criterion on stdout, progress
// on stderr. Exit status is nonzero if any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "chess_oracles.hpp"
#include "nn_oracles.hpp"
#include "pawn/data/labeling.hpp"
#include "pawn/data/stats.hpp"
#include "pawn/models.hpp"
#include "pawn/nn/adamw.hpp"
#include "pawn/training.hpp"
#include "synthetic_records.hpp"

using namespace pawn;
using testing::TD;

namespace {

const std::string kData = PAWN_TEST_DATA_DIR;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string fixed(double v, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

void progress(const std::string& s) { std::cerr << "  " << s << std::endl; }

// ---------------------------------------------------------------- criteria

Outcome valuation_golden() {
  const auto v = derive_valuation(compute_stats(read_dataset(kData + "/reference_stats.csv")));
  const std::map<PieceKind, double> expect = {{PieceKind::Pawn, 1.00},
                                              {PieceKind::Knight, 3.29},
                                              {PieceKind::Bishop, 3.54},
                                              {PieceKind::Rook, 3.77},
                                              {PieceKind::Queen, 5.14}};
  double worst = 0;
  std::string line;
  for (const auto& [k, e] : expect) {
    worst = std::max(worst, std::abs(v.at(k) - e));
    line += std::string(line.empty() ? "" : " ") + kind_letter(k) + "=" + fixed(v.at(k));
  }
  return pass_if(worst <= 0.01, line + ", max deviation " + fmt(worst, 3) + " (tol 0.01)");
}

Outcome gradient_suite() {
  std::mt19937_64 rng(2);
  double layer_worst = 0, composed_worst = 0;
  std::string layer_where, composed_where;
  auto layer = [&](const std::string& name, const nn::GradCheckResult& r) {
    if (r.max_rel_error >= layer_worst) layer_worst = r.max_rel_error, layer_where = name + " " + r.worst;
  };
  auto composed = [&](const std::string& name, const nn::GradCheckResult& r) {
    if (r.max_rel_error >= composed_worst) composed_worst = r.max_rel_error, composed_where = name + " " + r.worst;
  };
  nn::Linear<double> lin(7, 5, rng);
  layer("linear", testing::check_module(lin, testing::random_tensor({6, 7}, rng), nn::Mode::Train));
  nn::Conv2d<double> conv(3, 4, rng);
  layer("conv2d", testing::check_module(conv, testing::random_tensor({2, 3, 8, 8}, rng), nn::Mode::Train));
  nn::BatchNorm<double> bn1(5), bn2(3);
  for (auto* bn : {&bn1, &bn2}) {
    for (auto& v : bn->gamma().value.data) v = nn::uniform(rng, 0.5, 2);
    for (auto& v : bn->beta().value.data) v = nn::uniform(rng, -1, 1);
  }
  layer("batchnorm1d", testing::check_module(bn1, testing::random_tensor({8, 5}, rng, -2, 3), nn::Mode::BatchStats));
  layer("batchnorm2d",
        testing::check_module(bn2, testing::random_tensor({3, 3, 4, 4}, rng, -2, 3), nn::Mode::BatchStats));
  layer("batchnorm2d-eval", testing::check_module(bn2, testing::random_tensor({3, 3, 4, 4}, rng), nn::Mode::Eval));
  nn::ReLU<double> relu;
  layer("relu", testing::check_module(relu, testing::random_tensor({4, 9}, rng), nn::Mode::Train));
  nn::Sigmoid<double> sig;
  layer("sigmoid", testing::check_module(sig, testing::random_tensor({4, 9}, rng, -4, 4), nn::Mode::Train));
  nn::AdaptiveAvgPool<double> pool;
  layer("avgpool", testing::check_module(pool, testing::random_tensor({2, 3, 8, 8}, rng), nn::Mode::Train));
  nn::Dropout<double> drop(0.3, 17);
  layer("dropout", testing::check_module(drop, testing::random_tensor({4, 9}, rng), nn::Mode::Train, 5,
                                         [&] { drop.reseed(17); }));
  nn::Unflatten<double> unflat(2, 2, 2);
  layer("unflatten", testing::check_module(unflat, testing::random_tensor({3, 8}, rng), nn::Mode::Train));

  TD pred = testing::random_tensor({20, 1}, rng, -3, 3), target = testing::random_tensor({20, 1}, rng, -3, 3);
  const auto h = nn::huber_loss(pred, target);
  layer("huber", nn::gradient_check([&] { return nn::huber_loss(pred, target).loss; }, {{"pred", &pred, &h.grad}}, 30));
  TD prob = testing::random_tensor({30}, rng, 0.05, 0.95), bits = testing::random_tensor({30}, rng, 0, 1);
  for (auto& b : bits.data) b = b > 0.5;
  const auto b = nn::bce_loss(prob, bits);
  layer("bce", nn::gradient_check([&] { return nn::bce_loss(prob, bits).loss; }, {{"pred", &prob, &b.grad}}, 40));
  TD logits = testing::random_tensor({30}, rng, -4, 4);
  const auto bl = nn::bce_with_logits(logits, bits);
  layer("bce_with_logits", nn::gradient_check([&] { return nn::bce_with_logits(logits, bits).loss; },
                                              {{"logits", &logits, &bl.grad}}, 40));
  progress("layers: max relative error " + fmt(layer_worst, 3));

  for (auto k : {ModelKind::Mlp1, ModelKind::Mlp2, ModelKind::Mlp3}) {
    Predictor<double> m(ModelSpec::baseline(k), 14);
    composed(model_kind_name(k), testing::predictor_gradient_check(m, 6, 23, 25));
  }
  Predictor<double> cnn(ModelSpec::mlp_cnn(4, 3, 8), 13);
  composed("mlp_cnn", testing::predictor_gradient_check(cnn, 6, 21, 25));
  Autoencoder<double> ae(4, 8, 31);
  composed("autoencoder", testing::autoencoder_gradient_check(ae, 3, 22, 15));
  progress("composed: max relative error " + fmt(composed_worst, 3));

  std::string detail = "layers max rel err " + fmt(layer_worst, 3) + " (tol 1e-6), composed max rel err " +
                       fmt(composed_worst, 3) + " (tol 1e-4)";
  if (layer_worst >= 1e-6) detail += "; worst layer: " + layer_where;
  if (composed_worst >= 1e-4) detail += "; worst composed: " + composed_where;
  return pass_if(layer_worst < 1e-6 && composed_worst < 1e-4, detail);
}

Outcome conv_oracle() {
  const double e = testing::conv_oracle_max_error(5);
  return pass_if(e < 1e-10, "100 cases, max abs diff " + fmt(e, 3) + " (tol 1e-10)");
}

Outcome huber_adamw_goldens() {
  const double h05 = nn::huber_loss(TD({1}, {0.5}), TD({1}, {0.0})).loss;
  const double h2 = nn::huber_loss(TD({1}, {2.0}), TD({1}, {0.0})).loss;
  nn::Param<double> p("w", {3});
  p.value = TD({3}, {1.0, -2.0, 0.5});
  nn::AdamWConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  nn::AdamW<double> opt({&p}, cfg);
  TD expect = p.value;
  double worst = 0;
  for (int s = 0; s < 10; ++s) {
    opt.step();  // gradient stays zero
    for (std::size_t i = 0; i < 3; ++i) {
      expect[i] *= 1 - cfg.lr * cfg.weight_decay;
      worst = std::max(worst, std::abs(p.value[i] - expect[i]) / std::abs(expect[i]));
    }
  }
  const bool ok = std::abs(h05 - 0.125) < 1e-12 && std::abs(h2 - 1.5) < 1e-12 && worst < 1e-12;
  return pass_if(ok, "Huber(0.5)=" + fmt(h05, 6) + " Huber(2.0)=" + fmt(h2, 6) +
                         ", AdamW zero-grad decay over 10 steps: max rel deviation from (1-lr*wd)^t " + fmt(worst, 3));
}

std::vector<BoardTensor> desk_positions(std::size_t n) {
  const auto src = load_sources({kData + "/desk50.pgn"});
  std::vector<BoardTensor> distinct;
  std::set<std::string> seen;
  for (const auto& sp : src.positions)
    if (seen.insert(fen_key(sp.position)).second) distinct.push_back(encode_board(sp.position));
  if (distinct.size() < n) throw std::runtime_error("desk corpus has only " + std::to_string(distinct.size()) + " positions");
  std::vector<BoardTensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(distinct[i * distinct.size() / n]);
  return out;
}

Outcome autoencoder_overfit() {
  const auto boards = desk_positions(200);
  Autoencoder<float> ae(4, 128, 1);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.lr = 1e-3;
  cfg.stop_at_accuracy = 0.99;
  const auto res = train_autoencoder(ae, boards, cfg, [](const AutoencoderEpoch& e) {
    if (e.epoch % 5 == 0 || e.cell_accuracy > 0.99)
      progress("epoch " + std::to_string(e.epoch) + " cell accuracy " + fmt(e.cell_accuracy, 5));
  });
  const auto acc = reconstruction_accuracy(ae, boards);
  double occupied = 0;
  for (const auto& b : boards)
    for (auto v : b.data) occupied += v;
  const double trivial = 1 - occupied / (768.0 * double(boards.size()));
  return pass_if(acc.cells > 0.99, "200 positions, d=128, " + std::to_string(res.curve.size()) +
                                       " epochs: cell accuracy " + fixed(100 * acc.cells) + "% (need > 99%), square accuracy " +
                                       fixed(100 * acc.squares) + "%, all-empty baseline " + fixed(100 * trivial) + "%");
}

Outcome predictor_learnability() {
  const auto recs = testing::linear_target_records(512, 17);
  auto m = build_model<float>(ModelSpec::baseline(ModelKind::Mlp2), 3);
  m.normalizer = fit_normalizer(recs);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 32;
  double first = 0, last = 0;
  int reached = 0;
  train_predictor(m, recs, {}, cfg, [&](const PredictorEpoch& e) {
    if (e.epoch == 1) first = e.train_mae_cp;
    last = e.train_mae_cp;
    if (!reached && e.train_mae_cp < 0.1 * first) reached = e.epoch;
  });
  return pass_if(reached > 0, "epoch-1 MAE " + fixed(first) + " cp, " +
                                  (reached ? "below 10% at epoch " + std::to_string(reached)
                                           : "never below 10% (final " + fixed(last) + " cp)"));
}

Outcome legality_oracle() {
  std::mt19937_64 rng(20240611);
  int agree = 0, positives = 0;
  std::string first_miss;
  for (int i = 0; i < 10000; ++i) {
    const Position p = testing::random_placement(rng);
    const bool expected = testing::naive_opponent_in_check(p);
    positives += expected;
    if (opponent_in_check(p) == expected)
      ++agree;
    else if (first_miss.empty())
      first_miss = fen_key(p);
  }
  return pass_if(agree == 10000, std::to_string(agree) + "/10000 agree (" + std::to_string(positives) +
                                     " in check)" + (first_miss.empty() ? "" : ", first mismatch " + first_miss));
}

/// Disjoint game ids across the split, every record on exactly one side.
Outcome check_split(const std::vector<PieceValueRecord>& records, const std::string& corpus) {
  const auto m = split_by_game(records, 0.8, 42);
  const auto parts = partition(records, m);
  std::set<std::string> tr, va;
  for (const auto& r : parts.train) tr.insert(r.game_id);
  for (const auto& r : parts.val) va.insert(r.game_id);
  std::size_t shared = 0;
  for (const auto& g : tr) shared += va.count(g);
  const auto ov = measure_overlap(parts);
  const bool ok = shared == 0 && ov.shared_games == 0 && parts.train.size() + parts.val.size() == records.size() &&
                  !parts.train.empty() && !parts.val.empty();
  return pass_if(ok, corpus + ": " + std::to_string(tr.size()) + " train / " + std::to_string(va.size()) +
                         " val games, " + std::to_string(shared) + " shared; FEN overlap " +
                         std::to_string(ov.shared_positions) + "/" + std::to_string(ov.val_positions) +
                         " val positions seen in train (" + fixed(100 * ov.fraction()) + "%)");
}

Outcome split_hygiene() {
  EngineConfig cfg;
  cfg.binary_path = PAWN_TOY_ENGINE;
  cfg.depth = 2;
  EnginePool pool(cfg, 1);
  std::stringstream csv;
  ingest({kData + "/desk50.pgn"}, pool, cfg, csv);
  return check_split(read_dataset(csv), "desk50 labeled by the toy engine");
}

std::string acceptance_engine() {
  if (const char* env = std::getenv("PAWN_ENGINE"); env && *env) return env;
  return PAWN_ACCEPTANCE_ENGINE;
}

Outcome end_to_end() {
  const std::string bin = acceptance_engine();
  if (bin.empty()) return {Status::Skip, "no UCI engine (set PAWN_ENGINE or configure -DPAWN_ENGINE=...)"};
  if (::access(bin.c_str(), X_OK) != 0) return {Status::Skip, "engine " + bin + " is not executable"};
  EngineConfig cfg;
  cfg.binary_path = bin;
  cfg.depth = 8;
  cfg.hash_mb = 16;
  std::vector<PieceValueRecord> records;
  IngestReport rep;
  {
    EnginePool pool(cfg, 1);
    std::stringstream csv;
    int lines = 0;
    rep = ingest({kData + "/desk50.pgn"}, pool, cfg, csv, IngestOptions{1, 2, false}, [&](const std::string& s) {
      if (s.rfind("labeled", 0) != 0 || ++lines % 5 == 0) progress(s);
    });
    records = read_dataset(csv);
  }
  progress("labeled " + std::to_string(rep.records) + " records from " + std::to_string(rep.games) + " games in " +
           fixed(rep.seconds, 0) + " s");
  std::vector<std::string> fails;
  if (rep.games != 50) fails.push_back("expected 50 games, got " + std::to_string(rep.games));
  if (!(rep.skip_rate() < 0.05)) fails.push_back("skip rate " + fixed(100 * rep.skip_rate()) + "%");

  std::size_t broken = 0;
  for (const auto& r : records) broken += r.value_cp != r.eval_base_cp - r.eval_ablated_cp;
  if (broken) fails.push_back(std::to_string(broken) + " records break value = base - ablated");
  // Re-evaluate a sample with a fresh engine process.
  std::size_t respot = 0, spot_mismatch = 0;
  {
    EnginePool fresh(cfg, 1);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20 && !records.empty(); ++i) {
      const auto& r = records[rng() % records.size()];
      const Position p = parse_fen(r.fen);
      const auto ablated = std::get<Position>(remove_piece(p, r.square));
      auto lease = fresh.acquire();
      const int base = evaluate(*lease, p, cfg).value, abl = evaluate(*lease, ablated, cfg).value;
      ++respot;
      spot_mismatch += base != r.eval_base_cp || abl != r.eval_ablated_cp || base - abl != r.value_cp;
    }
  }
  if (spot_mismatch) fails.push_back(std::to_string(spot_mismatch) + "/" + std::to_string(respot) + " re-evaluations differ");

  const Outcome split = check_split(records, "desk50 at depth 8");
  progress(split.detail);
  if (split.status != Status::Pass) fails.push_back("split: " + split.detail);

  const auto manifest = split_by_game(records, 0.8, 42);
  const auto parts = partition(records, manifest);
  const Normalizer norm = fit_normalizer(parts.train);
  TrainConfig tcfg;
  tcfg.epochs = 30;
  tcfg.batch_size = 64;

  std::map<std::string, std::pair<double, double>> mae;  // name -> (train, val)
  for (auto k : {ModelKind::Mlp1, ModelKind::Mlp2, ModelKind::Mlp3}) {
    auto m = build_model<float>(ModelSpec::baseline(k), 1);
    m.normalizer = norm;
    train_predictor(m, parts.train, parts.val, tcfg);
    const auto e = evaluate(m, parts.train, parts.val);
    mae[model_kind_name(k)] = {e.train_mae_cp, e.val_mae_cp};
    progress(std::string(model_kind_name(k)) + ": train " + fixed(e.train_mae_cp) + " cp, val " + fixed(e.val_mae_cp) + " cp");
  }
  const ModelSpec cnn_spec = ModelSpec::mlp_cnn(4, 3, 128);
  {
    Autoencoder<float> ae(4, 128, 1);
    TrainConfig acfg = tcfg;
    acfg.batch_size = 32;
    const auto boards = training_boards(records, manifest);
    const auto r = train_autoencoder(ae, boards, acfg);
    progress("autoencoder on " + std::to_string(boards.size()) + " positions: cell accuracy " +
             fixed(100 * r.curve.back().cell_accuracy) + "%");
    auto m = build_model<float>(cnn_spec, 1);
    m.normalizer = norm;
    install_encoder(m, ae.encoder);
    train_predictor(m, parts.train, parts.val, tcfg);
    const auto e = evaluate(m, parts.train, parts.val);
    mae[cnn_spec.name()] = {e.train_mae_cp, e.val_mae_cp};
    progress(cnn_spec.name() + ": train " + fixed(e.train_mae_cp) + " cp, val " + fixed(e.val_mae_cp) + " cp");
  }
  double best_baseline = 1e300;
  std::string best_name;
  for (const auto& [name, v] : mae)
    if (name != cnn_spec.name() && v.first < best_baseline) best_baseline = v.first, best_name = name;
  const double cnn_train = mae[cnn_spec.name()].first;
  if (!(cnn_train < best_baseline))
    fails.push_back(cnn_spec.name() + " train MAE " + fixed(cnn_train) + " not below " + best_name + " " + fixed(best_baseline));

  std::string detail = std::to_string(rep.records) + " records, skip rate " + fixed(100 * rep.skip_rate()) +
                       "%, identity holds on " + std::to_string(records.size() - broken) + "/" +
                       std::to_string(records.size()) + " (" + std::to_string(respot - spot_mismatch) + "/" +
                       std::to_string(respot) + " re-evaluated); train MAE";
  for (const auto& [name, v] : mae) detail += " " + name + "=" + fixed(v.first);
  detail += " cp";
  for (const auto& f : fails) detail += "; " + f;
  return pass_if(fails.empty(), detail);
}

Outcome model_round_trip() {
  const auto src = load_sources({kData + "/desk50.pgn"}, 7);
  std::mt19937_64 rng(11);
  std::size_t compared = 0, differ = 0;
  for (const ModelSpec& spec : {ModelSpec::mlp_cnn(4, 3, 64), ModelSpec::baseline(ModelKind::Mlp3)}) {
    auto m = build_model<float>(spec, 77);
    m.normalizer = {12.5, 321.0};
    // Move batchnorm running statistics off their defaults.
    nn::Tensor<float> boards({16, 12, 8, 8}), feats({16, spec.feature_dim()});
    for (auto& v : boards.data) v = rng() % 9 == 0;
    for (auto& v : feats.data) v = float(nn::uniform(rng, -1, 1));
    for (int i = 0; i < 3; ++i) m.forward(boards, feats, nn::Mode::Train);
    const std::string path = (std::filesystem::temp_directory_path() / "pawn_acceptance_roundtrip.pawn").string();
    save_predictor(path, m);
    auto back = load_predictor(path);
    std::filesystem::remove(path);
    for (int q = 0; q < 50; ++q) {
      const Position& p = src.positions[rng() % src.positions.size()].position;
      std::vector<Square> squares;
      for (int i = 0; i < 64; ++i)
        if (p.board[static_cast<std::size_t>(i)] && p.board[static_cast<std::size_t>(i)]->kind != PieceKind::King)
          squares.push_back(Square::from_index(i));
      const Square sq = squares[rng() % squares.size()];
      const double a = m.predict_value(p, sq), b = back->predict_value(p, sq);
      ++compared;
      differ += std::memcmp(&a, &b, sizeof a) != 0;
    }
  }
  return pass_if(differ == 0 && compared == 100,
                 std::to_string(compared - differ) + "/" + std::to_string(compared) + " queries bit-identical after reload");
}

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"valuation_golden", 1, valuation_golden},
      {"gradient_suite", 120, gradient_suite},
      {"conv_oracle", 30, conv_oracle},
      {"huber_adamw_goldens", 1, huber_adamw_goldens},
      {"autoencoder_overfit", 600, autoencoder_overfit},
      {"predictor_learnability", 120, predictor_learnability},
      {"legality_oracle", 60, legality_oracle},
      {"split_hygiene", 60, split_hygiene},
      {"end_to_end_desk_run", 3600, end_to_end},
      {"model_round_trip", 10, model_round_trip},
  };
  CLI::App app{"acceptance criteria"};
  std::vector<std::string> only;
  app.add_option("criteria", only, "run only these");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    std::cerr << "[" << c.name << "]" << std::endl;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::Pass && s > c.budget_s) {
      o.status = Status::Fail;
      o.detail += "; over the " + fmt(c.budget_s) + " s budget";
    }
    failed += o.status == Status::Fail;
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::cout << tag << " " << c.name << ": " << o.detail << " [" << fixed(s, 2) << " s]" << std::endl;
  }
  return failed ? 1 : 0;
}
