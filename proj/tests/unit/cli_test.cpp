#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "pawn/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = PAWN_TEST_DATA_DIR;

struct CliResult {
  int code;
  std::string out, err;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pawn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult cli(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && env -u PAWN_ENGINE '" + PAWN_CLI + "' " + args +
                            " >stdout.txt 2>stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(dir_ / "stdout.txt"),
            read_file(dir_ / "stderr.txt")};
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, ValuationLine) {
  auto r = cli("valuation --dataset " + kData + "/reference_stats.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "P=1.00 N=3.29 B=3.54 R=3.77 Q=5.14\n");
}

TEST_F(Cli, StatsTextAndJson) {
  auto r = cli("stats --dataset " + kData + "/reference_stats.csv --json s.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("white pawn"), std::string::npos);
  const auto body = r.out.substr(0, r.out.size() - 1);
  const auto last = body.substr(body.rfind('\n') + 1);
  const auto j = json::parse(last);
  ASSERT_EQ(j["pieces"].size(), 10u);
  EXPECT_EQ(j["pieces"][0]["median_cp"], 147.0);
  EXPECT_EQ(json::parse(read_file(path("s.json"))), j);
}

TEST_F(Cli, SplitIsDeterministic) {
  const std::string ds = kData + "/reference_stats.csv";
  ASSERT_EQ(cli("split --dataset " + ds + " --ratio 0.8 --seed 42 --manifest a.json").code, 0);
  ASSERT_EQ(cli("split --dataset " + ds + " --ratio 0.8 --seed 42 --manifest b.json").code, 0);
  ASSERT_EQ(cli("split --dataset " + ds + " --ratio 0.8 --seed 7 --manifest c.json").code, 0);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  EXPECT_NE(read_file(path("a.json")), read_file(path("c.json")));
  const auto j = json::parse(cli("split --dataset " + ds + " --manifest d.json").out);
  EXPECT_EQ(j["overlap"]["shared_games"], 0);
}

TEST_F(Cli, ErrorsAreOneParsableLine) {
  const std::regex line(R"(error: [a-z_]+: [^\n]+\n)");
  for (const std::string args : {"valuation --dataset missing.csv", "train --dataset x.csv --kind mlp9",
                                 "predict --fen '8/8/8/8/8/8/8/8 w - - 0 1'", "nosuchcommand",
                                 "predict --fen 'bad' --mode engine"}) {
    auto r = cli(args);
    EXPECT_NE(r.code, 0) << args;
    EXPECT_TRUE(std::regex_match(r.err, line)) << args << ": " << r.err;
  }
  EXPECT_EQ(cli("predict --fen x --mode engine").err, "error: usage: no engine: pass --engine or set PAWN_ENGINE\n");
}

TEST_F(Cli, PipelineWithToyEngine) {
  {
    std::ofstream f(path("positions.fen"));
    // Ten distinct positions, each its own game.
    for (const char* fen :
         {"rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
          "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 1",
          "rnbqkbnr/pp1ppppp/8/2p5/4P3/8/PPPP1PPP/RNBQKBNR w KQkq - 0 2",
          "rnbqkbnr/pp1ppppp/8/2p5/4P3/5N2/PPPP1PPP/RNBQKB1R b KQkq - 1 2",
          "r2qkb1r/pp1np1pp/2b1p3/3p4/3Q1B2/2N2N2/PPP2PPP/R3K2R b KQkq - 1 10",
          "k7/8/8/8/r7/8/8/R3K3 w - - 0 1", "4k3/8/8/3q4/8/8/8/3QK3 w - - 0 1",
          "4k3/pppppppp/8/8/8/8/PPPPPPPP/4K3 w - - 0 1", "r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1",
          "4k3/8/2n5/8/8/5B2/8/4K3 b - - 0 1"})
      f << fen << '\n';
  }
  auto r = cli(std::string("ingest positions.fen -o d.csv --depth 3 --engine ") + PAWN_TOY_ENGINE);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = json::parse(r.out);
  EXPECT_EQ(rep["games"], 10);
  EXPECT_EQ(rep["skipped"]["illegal_removal"], 1);  // the pinned rook on a4
  ASSERT_EQ(cli("split --dataset d.csv --seed 1").code, 0);
  ASSERT_EQ(cli("normalize --dataset d.csv").code, 0);
  r = cli("train-ae --dataset d.csv --cnn-depth 4 -d 16 --epochs 2 --batch-size 4 -o ae.pawn --curves ae.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli("train --dataset d.csv --kind mlp_cnn --cnn-depth 4 --mlp-depth 3 -d 16 --autoencoder ae.pawn "
           "--epochs 2 --batch-size 8 --curves tr.jsonl -o m.pawn");
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli("eval --model m.pawn --dataset d.csv --report report.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gap (val - train)"), std::string::npos);
  const auto report = json::parse(read_file(path("report.json")));
  for (const char* k : {"model_spec", "dataset_manifest_hash", "train_mae_cp", "val_mae_cp", "gap", "per_kind", "config"})
    EXPECT_TRUE(report.contains(k)) << k;
  EXPECT_EQ(report["model_spec"]["kind"], "mlp_cnn");

  r = cli("predict --model m.pawn --fen 'k7/8/8/8/r7/8/8/R3K3 w - - 0 1'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pred = json::parse(r.out);
  ASSERT_EQ(pred["values"].size(), 2u);
  EXPECT_EQ(pred["values"][1]["skipped"], "illegal_removal");

  r = cli("plot ae.jsonl tr.jsonl -o curves.svg");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto svg = read_file(path("curves.svg"));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("predictor: MAE (cp)"), std::string::npos);
}

TEST(Plot, GroupsMaeSeriesPerCurveKind) {
  std::vector<json> rows;
  for (int e = 1; e <= 3; ++e) {
    rows.push_back({{"kind", "predictor"}, {"epoch", e}, {"loss", 1.0 / e}, {"train_mae_cp", 10.0 / e},
                    {"val_mae_cp", 12.0 / e}, {"seconds", 0.1}});
    rows.push_back({{"kind", "autoencoder"}, {"epoch", e}, {"loss", 0.5 / e}, {"cell_accuracy", 0.9}});
  }
  const auto panels = pawn::curve_panels(rows);
  ASSERT_EQ(panels.size(), 4u);
  EXPECT_EQ(panels[0].title, "predictor: loss");
  EXPECT_EQ(panels[1].title, "predictor: MAE (cp)");
  ASSERT_EQ(panels[1].series.size(), 2u);
  EXPECT_EQ(panels[1].series[0].points.size(), 3u);
  const auto svg = pawn::render_svg(panels);
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 5u);
  EXPECT_THROW(pawn::render_svg({}), std::invalid_argument);
}

}  // namespace
