// pawn: command-line driver for labeling, training, evaluation and serving.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pawn/chess.hpp"
#include "pawn/data/labeling.hpp"
#include "pawn/data/record.hpp"
#include "pawn/data/split.hpp"
#include "pawn/data/stats.hpp"
#include "pawn/models.hpp"
#include "pawn/plot.hpp"
#include "pawn/server.hpp"
#include "pawn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pawn;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string file_hash(const std::string& path) { return hex64(fnv1a64(slurp(path))); }

/// Hash of the dataset bytes followed by the manifest bytes.
std::string dataset_manifest_hash(const std::string& dataset, const std::string& manifest) {
  return hex64(fnv1a64(slurp(manifest), fnv1a64(slurp(dataset))));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path);
  out << text;
  if (!out) throw DatasetError("write failed: " + path);
}

std::string default_manifest_path(const std::string& dataset) {
  fs::path p(dataset);
  return (p.parent_path() / (p.stem().string() + ".manifest.json")).string();
}

void log(const std::string& msg) { std::cerr << msg << '\n'; }

struct EngineFlags {
  std::string path;
  std::vector<std::string> args;
  int depth = 20;
  int threads = 1;
  int hash_mb = 256;
  long timeout_ms = 300000;

  void add(CLI::App* app, bool with_depth_default = true) {
    app->add_option("--engine", path, "UCI engine binary (PAWN_ENGINE overrides)");
    app->add_option("--engine-arg", args, "extra engine command-line argument (repeatable)");
    auto* d = app->add_option("--depth", depth, "search depth");
    if (with_depth_default) d->capture_default_str();
    app->add_option("--threads-per-engine", threads, "Threads option per engine process")->capture_default_str();
    app->add_option("--hash-mb", hash_mb, "Hash option per engine process")->capture_default_str();
    app->add_option("--timeout-ms", timeout_ms, "per-evaluation timeout")->capture_default_str();
  }

  std::optional<EngineConfig> config() const {
    const std::string bin = resolve_engine_path(path);
    if (bin.empty()) return std::nullopt;
    EngineConfig c;
    c.binary_path = bin;
    c.args = args;
    c.depth = depth;
    c.threads = threads;
    c.hash_mb = hash_mb;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    c.validate();
    return c;
  }

  EngineConfig required() const {
    auto c = config();
    if (!c) throw UsageError("no engine: pass --engine or set PAWN_ENGINE");
    return *c;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--epochs", cfg.epochs)->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    app->add_option("--lr", cfg.lr)->capture_default_str();
    app->add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
    app->add_option("--seed", cfg.seed)->capture_default_str();
    app->add_flag("!--no-shuffle", cfg.shuffle, "keep record order");
  }
};

// ---- ingest ----

struct IngestArgs {
  std::vector<std::string> sources;
  std::string out, report;
  EngineFlags engine;
  std::size_t workers = 1, sample_every = 1;
  bool drop_mate = false;
};

int run_ingest(const IngestArgs& a) {
  const EngineConfig cfg = a.engine.required();
  EnginePool pool(cfg, std::max<std::size_t>(a.workers, 1));
  const std::string tmp = a.out + ".partial";
  IngestReport rep;
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DatasetError("cannot write " + tmp);
    rep = ingest(a.sources, pool, cfg, out, IngestOptions{a.workers, a.sample_every, a.drop_mate}, log);
    out.flush();
    if (!out) throw DatasetError("write failed: " + tmp);
  }
  fs::rename(tmp, a.out);
  json j = rep.to_json();
  j["dataset"] = a.out;
  j["dataset_hash"] = file_hash(a.out);
  if (!a.report.empty()) write_text(a.report, j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return 0;
}

// ---- split / normalize ----

struct SplitArgs {
  std::string dataset, manifest;
  double ratio = 0.8;
  std::uint64_t seed = 42;
};

int run_split(const SplitArgs& a) {
  const auto records = read_dataset(a.dataset);
  const auto m = split_by_game(records, a.ratio, a.seed);
  const std::string path = a.manifest.empty() ? default_manifest_path(a.dataset) : a.manifest;
  save_manifest(path, m);
  const auto parts = partition(records, m);
  const auto ov = measure_overlap(parts);
  json j = {{"manifest", path},
            {"train_games", m.train_game_ids.size()},
            {"val_games", m.val_game_ids.size()},
            {"train_records", parts.train.size()},
            {"val_records", parts.val.size()},
            {"overlap",
             {{"val_positions", ov.val_positions},
              {"shared_positions", ov.shared_positions},
              {"shared_games", ov.shared_games},
              {"fraction", ov.fraction()}}}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct NormalizeArgs {
  std::string dataset, manifest;
};

int run_normalize(const NormalizeArgs& a) {
  const std::string path = a.manifest.empty() ? default_manifest_path(a.dataset) : a.manifest;
  auto m = load_manifest(path);
  const auto parts = partition(read_dataset(a.dataset), m);
  if (parts.train.empty()) throw DatasetError("manifest selects no training records from " + a.dataset);
  m.normalizer = fit_normalizer(parts.train);
  save_manifest(path, m);
  std::cout << json{{"manifest", path}, {"mean", m.normalizer->mean}, {"std", m.normalizer->std},
                    {"train_records", parts.train.size()}}
                   .dump(2)
            << '\n';
  return 0;
}

// ---- stats / valuation ----

struct StatsArgs {
  std::string dataset, json_out;
  double cap = 0;
};

std::vector<PieceValueRecord> load_capped(const std::string& dataset, double cap, json* capped_out = nullptr) {
  auto records = read_dataset(dataset);
  if (cap > 0) {
    auto c = cap_values(records, cap);
    if (capped_out)
      for (PieceKind k : kValuedKinds) (*capped_out)[kind_name(k)] = c.capped[static_cast<std::size_t>(k)];
    records = std::move(c.records);
  }
  return records;
}

int run_stats(const StatsArgs& a) {
  json capped = json::object();
  const auto records = load_capped(a.dataset, a.cap, &capped);
  const auto stats = compute_stats(records);
  std::ostringstream os;
  os << std::left << std::setw(16) << "piece" << std::right << std::setw(12) << "mean" << std::setw(12) << "median"
     << std::setw(12) << "count" << '\n';
  json rows = json::array();
  for (Color c : {Color::White, Color::Black})
    for (PieceKind k : kValuedKinds) {
      const Piece p{c, k};
      const PieceStat* s = stats.find(p);
      const std::string name = std::string(c == Color::White ? "white " : "black ") + kind_name(k);
      if (!s) {
        os << std::left << std::setw(16) << name << std::right << std::setw(12) << "-" << std::setw(12) << "-"
           << std::setw(12) << 0 << '\n';
        continue;
      }
      os << std::left << std::setw(16) << name << std::right << std::showpos << std::fixed << std::setprecision(2)
         << std::setw(12) << s->mean_cp << std::setw(12) << s->median_cp << std::noshowpos << std::setw(12) << s->count
         << '\n';
      rows.push_back({{"piece", std::string(1, p.fen_char())},
                      {"name", name},
                      {"mean_cp", s->mean_cp},
                      {"median_cp", s->median_cp},
                      {"count", s->count}});
    }
  json j = {{"dataset", a.dataset}, {"records", records.size()}, {"pieces", rows}};
  if (a.cap > 0) j["cap"] = {{"multiplier", a.cap}, {"capped", capped}};
  std::cout << os.str() << j.dump() << '\n';
  if (!a.json_out.empty()) write_text(a.json_out, j.dump(2) + "\n");
  return 0;
}

struct ValuationArgs {
  std::string dataset;
  double cap = 0;
};

int run_valuation(const ValuationArgs& a) {
  const auto v = derive_valuation(compute_stats(load_capped(a.dataset, a.cap)));
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  bool first = true;
  for (PieceKind k : kValuedKinds) {
    os << (first ? "" : " ") << kind_letter(k) << '=' << v.at(k);
    first = false;
  }
  std::cout << os.str() << '\n';
  return 0;
}

// ---- training ----

struct SplitData {
  std::vector<PieceValueRecord> all;
  SplitManifest manifest;
  SplitRecords parts;
  std::string hash;
};

SplitData load_split(const std::string& dataset, const std::string& manifest_flag) {
  SplitData s;
  const std::string mpath = manifest_flag.empty() ? default_manifest_path(dataset) : manifest_flag;
  s.all = read_dataset(dataset);
  s.manifest = load_manifest(mpath);
  s.parts = partition(s.all, s.manifest);
  s.hash = dataset_manifest_hash(dataset, mpath);
  if (s.parts.train.empty()) throw DatasetError("manifest selects no training records from " + dataset);
  return s;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) {
    if (path.empty()) return;
    out_.open(path, std::ios::binary);
    if (!out_) throw DatasetError("cannot write " + path);
  }
  void write(const json& j) {
    if (!out_.is_open()) return;
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct TrainAeArgs {
  std::string dataset, manifest, out = "autoencoder.pawn", curves;
  int cnn_depth = 4, d = 512;
  std::size_t max_boards = 0;
  TrainFlags train;
};

int run_train_ae(TrainAeArgs a) {
  const auto data = load_split(a.dataset, a.manifest);
  auto boards = training_boards(data.all, data.manifest);
  if (a.max_boards > 0 && boards.size() > a.max_boards) boards.resize(a.max_boards);
  log("autoencoder: " + std::to_string(boards.size()) + " distinct training positions");
  Autoencoder<float> ae(a.cnn_depth, a.d, a.train.cfg.seed);
  JsonlWriter curves(a.curves);
  const auto res = train_autoencoder(ae, boards, a.train.cfg, [&](const AutoencoderEpoch& e) {
    curves.write(e.to_json());
    log("epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.loss) + " cell_acc " +
        std::to_string(e.cell_accuracy) + " square_acc " + std::to_string(e.square_accuracy));
  });
  const auto& last = res.curve.back();
  json meta = {{"dataset_manifest_hash", data.hash},
               {"boards", boards.size()},
               {"epochs_run", res.curve.size()},
               {"cell_accuracy", last.cell_accuracy},
               {"square_accuracy", last.square_accuracy},
               {"config", a.train.cfg.to_json()}};
  save_autoencoder(a.out, ae, meta);
  meta["path"] = a.out;
  std::cout << meta.dump(2) << '\n';
  return 0;
}

struct TrainArgs {
  std::string dataset, manifest, kind = "mlp_cnn", autoencoder, out = "model.pawn", curves, checkpoint;
  std::optional<int> cnn_depth, mlp_depth;
  int d = 512;
  bool fine_tune = false;
  double huber_delta = 1.0;
  TrainFlags train;
};

ModelSpec spec_from(const std::string& kind, std::optional<int> cnn_depth, std::optional<int> mlp_depth, int d) {
  const ModelKind k = parse_model_kind(kind);
  ModelSpec s = k == ModelKind::MlpCnn ? ModelSpec::mlp_cnn(cnn_depth.value_or(4), mlp_depth.value_or(3), d)
                                       : ModelSpec::baseline(k);
  if (k != ModelKind::MlpCnn && (cnn_depth || mlp_depth))
    throw UsageError("--cnn-depth and --mlp-depth apply to mlp_cnn only");
  s.validate();
  return s;
}

int run_train(TrainArgs a) {
  auto data = load_split(a.dataset, a.manifest);
  const ModelSpec spec = spec_from(a.kind, a.cnn_depth, a.mlp_depth, a.d);
  auto m = build_model<float>(spec, a.train.cfg.seed);
  m.normalizer = data.manifest.normalizer ? *data.manifest.normalizer : fit_normalizer(data.parts.train);
  if (spec.has_encoder()) {
    if (!a.autoencoder.empty()) {
      auto ae = load_autoencoder(a.autoencoder);
      install_encoder(m, ae->encoder);
    } else if (!a.fine_tune) {
      throw UsageError("mlp_cnn needs --autoencoder (or --fine-tune-encoder to train from scratch)");
    }
  } else if (!a.autoencoder.empty()) {
    throw UsageError("--autoencoder applies to mlp_cnn only");
  }
  TrainConfig cfg = a.train.cfg;
  cfg.fine_tune_encoder = a.fine_tune;
  cfg.huber_delta = a.huber_delta;
  cfg.checkpoint_path = a.checkpoint;
  m.metadata["dataset_manifest_hash"] = data.hash;
  m.metadata["dataset_hash"] = file_hash(a.dataset);
  m.metadata["train_config"] = cfg.to_json();
  if (!a.autoencoder.empty()) m.metadata["autoencoder"] = a.autoencoder;

  log(spec.name() + ": " + std::to_string(m.parameter_count()) + " parameters, " +
      std::to_string(data.parts.train.size()) + " train / " + std::to_string(data.parts.val.size()) + " val records");
  JsonlWriter curves(a.curves);
  const auto res = train_predictor(m, data.parts.train, data.parts.val, cfg, [&](const PredictorEpoch& e) {
    curves.write(e.to_json());
    std::ostringstream os;
    os << "epoch " << e.epoch << " loss " << e.loss << " train_mae " << e.train_mae_cp;
    if (e.val_mae_cp) os << " val_mae " << *e.val_mae_cp;
    log(os.str());
  });
  m.metadata["best_epoch"] = res.best_epoch;
  if (!data.parts.val.empty()) {
    const auto rep = evaluate(m, data.parts.train, data.parts.val);
    m.metadata["train_mae_cp"] = rep.train_mae_cp;
    m.metadata["val_mae_cp"] = rep.val_mae_cp;
  } else {
    m.metadata["train_mae_cp"] = res.curve.back().train_mae_cp;
  }
  save_predictor(a.out, m);
  json out = {{"model", a.out}, {"spec", spec.to_json()}, {"name", spec.name()}};
  for (const char* k : {"best_epoch", "train_mae_cp", "val_mae_cp"})
    if (m.metadata.contains(k)) out[k] = m.metadata[k];
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct EvalArgs {
  std::string model, dataset, manifest, report = "report.json";
};

int run_eval(const EvalArgs& a) {
  auto m = load_predictor(a.model);
  const auto data = load_split(a.dataset, a.manifest);
  const auto rep = evaluate(*m, data.parts.train, data.parts.val);
  json j = rep.to_json();
  j["model_spec"] = m->spec().to_json();
  j["model"] = a.model;
  j["dataset_manifest_hash"] = data.hash;
  j["config"] = m->metadata.value("train_config", json::object());
  if (!a.report.empty()) write_text(a.report, j.dump(2) + "\n");
  std::cout << m->spec().name() << '\n' << rep.to_text();
  return 0;
}

// ---- predict / serve ----

struct PredictArgs {
  std::string fen, model, mode;
  EngineFlags engine;
  bool debug = false;
  std::optional<int> depth;
};

int run_predict(const PredictArgs& a) {
  ServiceOptions opt;
  const std::string mode = a.mode.empty() ? (a.model.empty() ? "engine" : "model") : a.mode;
  if (mode == "engine") opt.engine = a.engine.required();
  PredictionService svc(opt);
  if (!a.model.empty()) svc.load_model_file(a.model);
  json req = {{"fen", a.fen}, {"mode", mode}, {"debug", a.debug}};
  if (a.depth) req["depth"] = *a.depth;
  std::cout << svc.predict(req).dump(2) << '\n';
  return 0;
}

struct ServeArgs {
  std::vector<std::string> models;
  std::string models_dir, host = "127.0.0.1";
  int port = kDefaultPort;
  std::size_t workers = 1;
  long request_timeout_ms = 600000;
  bool debug = false;
  EngineFlags engine;
};

int run_serve(const ServeArgs& a) {
  ServiceOptions opt;
  opt.engine = a.engine.config();
  opt.engine_pool_size = std::max<std::size_t>(a.workers, 1);
  opt.request_timeout = std::chrono::milliseconds(a.request_timeout_ms);
  opt.models_dir = a.models_dir;
  opt.debug = a.debug;
  PredictionService svc(opt);
  for (const auto& p : a.models) svc.load_model_file(p);
  svc.refresh();
  httplib::Server server;
  install_routes(server, svc);
  if (!server.bind_to_port(a.host, a.port))
    throw std::runtime_error("cannot bind " + a.host + ":" + std::to_string(a.port));
  const json h = svc.health();
  log("listening on http://" + a.host + ":" + std::to_string(a.port) + " (" + std::to_string(h["models"].get<std::size_t>()) +
      " models, engine " + (h["engine"].get<bool>() ? "on" : "off") + ")");
  server.listen_after_bind();
  return 0;
}

struct PlotArgs {
  std::vector<std::string> curves;
  std::string out = "curves.svg";
};

int run_plot(const PlotArgs& a) {
  std::vector<json> rows;
  for (const auto& p : a.curves) {
    if (!fs::is_regular_file(p)) throw DatasetError("cannot read " + p);
    auto r = read_jsonl(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const auto panels = curve_panels(rows);
  write_text(a.out, render_svg(panels));
  std::cout << json{{"svg", a.out}, {"panels", panels.size()}, {"rows", rows.size()}}.dump() << '\n';
  return 0;
}

int fail(const std::string& kind, const std::string& msg, int code = 1) {
  std::string m = msg;
  for (auto& c : m)
    if (c == '\n') c = ' ';
  std::cerr << "error: " << kind << ": " << m << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pawn: contextual chess piece values"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::function<int()> action;

  IngestArgs ingest_a;
  {
    auto* c = app.add_subcommand("ingest", "label PGN/FEN sources with engine ablations into a CSV dataset");
    c->add_option("sources", ingest_a.sources, "PGN files, or text files with one FEN per line")->required();
    c->add_option("-o,--out", ingest_a.out, "dataset CSV to write")->required();
    c->add_option("--report", ingest_a.report, "also write the ingest report JSON here");
    c->add_option("--workers", ingest_a.workers, "engine processes labeling in parallel")->capture_default_str();
    c->add_option("--sample-every", ingest_a.sample_every, "label every k-th ply")->capture_default_str();
    c->add_flag("--drop-mate", ingest_a.drop_mate, "drop records whose evaluations involve mate");
    ingest_a.engine.add(c);
    c->callback([&] { action = [&] { return run_ingest(ingest_a); }; });
  }
  SplitArgs split_a;
  {
    auto* c = app.add_subcommand("split", "game-level train/validation split");
    c->add_option("--dataset", split_a.dataset)->required();
    c->add_option("--manifest", split_a.manifest, "output path (default <dataset>.manifest.json)");
    c->add_option("--ratio", split_a.ratio)->capture_default_str();
    c->add_option("--seed", split_a.seed)->capture_default_str();
    c->callback([&] { action = [&] { return run_split(split_a); }; });
  }
  NormalizeArgs norm_a;
  {
    auto* c = app.add_subcommand("normalize", "fit target normalization on the training split");
    c->add_option("--dataset", norm_a.dataset)->required();
    c->add_option("--manifest", norm_a.manifest);
    c->callback([&] { action = [&] { return run_normalize(norm_a); }; });
  }
  StatsArgs stats_a;
  {
    auto* c = app.add_subcommand("stats", "per-piece mean, median and count");
    c->add_option("--dataset", stats_a.dataset)->required();
    c->add_option("--cap", stats_a.cap, "clamp values to +-cap x standard material first");
    c->add_option("--json", stats_a.json_out, "also write the JSON here");
    c->callback([&] { action = [&] { return run_stats(stats_a); }; });
  }
  ValuationArgs val_a;
  {
    auto* c = app.add_subcommand("valuation", "pawn-relative values from median piece values");
    c->add_option("--dataset", val_a.dataset)->required();
    c->add_option("--cap", val_a.cap, "clamp values to +-cap x standard material first");
    c->callback([&] { action = [&] { return run_valuation(val_a); }; });
  }
  TrainAeArgs ae_a;
  ae_a.train.cfg.stop_at_accuracy = 0;
  {
    auto* c = app.add_subcommand("train-ae", "train the board autoencoder on training-split positions");
    c->add_option("--dataset", ae_a.dataset)->required();
    c->add_option("--manifest", ae_a.manifest);
    c->add_option("-o,--out", ae_a.out)->capture_default_str();
    c->add_option("--curves", ae_a.curves, "per-epoch JSON lines");
    c->add_option("--cnn-depth", ae_a.cnn_depth)->capture_default_str();
    c->add_option("-d", ae_a.d, "representation width")->capture_default_str();
    c->add_option("--max-boards", ae_a.max_boards, "use at most this many positions");
    c->add_option("--stop-at-accuracy", ae_a.train.cfg.stop_at_accuracy, "stop once cell accuracy exceeds this");
    ae_a.train.add(c);
    c->callback([&] { action = [&] { return run_train_ae(ae_a); }; });
  }
  TrainArgs train_a;
  {
    auto* c = app.add_subcommand("train", "train a piece-value predictor");
    c->add_option("--dataset", train_a.dataset)->required();
    c->add_option("--manifest", train_a.manifest);
    c->add_option("--kind", train_a.kind, "mlp1 | mlp2 | mlp3 | mlp_cnn")->capture_default_str();
    c->add_option("--cnn-depth", train_a.cnn_depth);
    c->add_option("--mlp-depth", train_a.mlp_depth);
    c->add_option("-d", train_a.d, "representation width")->capture_default_str();
    c->add_option("--autoencoder", train_a.autoencoder, "trained autoencoder providing the encoder");
    c->add_flag("--fine-tune-encoder", train_a.fine_tune, "update encoder weights during training");
    c->add_option("--huber-delta", train_a.huber_delta)->capture_default_str();
    c->add_option("-o,--out", train_a.out)->capture_default_str();
    c->add_option("--curves", train_a.curves, "per-epoch JSON lines");
    c->add_option("--checkpoint", train_a.checkpoint, "best-validation model written here during training");
    train_a.train.add(c);
    c->callback([&] { action = [&] { return run_train(train_a); }; });
  }
  EvalArgs eval_a;
  {
    auto* c = app.add_subcommand("eval", "train/validation MAE of a model");
    c->add_option("--model", eval_a.model)->required();
    c->add_option("--dataset", eval_a.dataset)->required();
    c->add_option("--manifest", eval_a.manifest);
    c->add_option("--report", eval_a.report, "report JSON path (empty: none)")->capture_default_str();
    c->callback([&] { action = [&] { return run_eval(eval_a); }; });
  }
  PredictArgs pred_a;
  {
    auto* c = app.add_subcommand("predict", "piece values for one position");
    c->add_option("--fen", pred_a.fen)->required();
    c->add_option("--model", pred_a.model);
    c->add_option("--mode", pred_a.mode, "model | engine (default: model when --model is given)")
        ->check(CLI::IsMember({"model", "engine"}));
    c->add_flag("--debug", pred_a.debug, "include engine evaluations");
    pred_a.engine.add(c);
    c->callback([&] {
      if (c->count("--depth")) pred_a.depth = pred_a.engine.depth;
      action = [&] { return run_predict(pred_a); };
    });
  }
  ServeArgs serve_a;
  {
    auto* c = app.add_subcommand("serve", "HTTP JSON API");
    c->add_option("--model", serve_a.models, "model file to load (repeatable)");
    c->add_option("--models-dir", serve_a.models_dir, "load *.pawn files from here, re-scanned per request");
    c->add_option("--host", serve_a.host)->capture_default_str();
    c->add_option("--port", serve_a.port)->capture_default_str();
    c->add_option("--workers", serve_a.workers, "engine processes")->capture_default_str();
    c->add_option("--request-timeout-ms", serve_a.request_timeout_ms, "wait for a free engine")->capture_default_str();
    c->add_flag("--debug", serve_a.debug, "include engine evaluations in engine-mode responses");
    serve_a.engine.add(c);
    c->callback([&] { action = [&] { return run_serve(serve_a); }; });
  }
  PlotArgs plot_a;
  {
    auto* c = app.add_subcommand("plot", "render training curves to SVG");
    c->add_option("curves", plot_a.curves, "JSON-lines curve files")->required();
    c->add_option("-o,--out", plot_a.out)->capture_default_str();
    c->callback([&] { action = [&] { return run_plot(plot_a); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    return action();
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const ServiceError& e) {
    return fail(e.kind(), e.what());
  } catch (const FenError& e) {
    return fail("invalid_fen", e.what());
  } catch (const ChessError& e) {
    return fail("chess", e.what());
  } catch (const EngineError& e) {
    return fail("engine", e.what());
  } catch (const DatasetError& e) {
    return fail("dataset", e.what());
  } catch (const nn::ModelFileError& e) {
    return fail("model", e.what());
  } catch (const TrainingDiverged& e) {
    return fail("diverged", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
