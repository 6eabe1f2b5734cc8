// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "cli_runner.hpp"
#include "n2s/graph_io.hpp"
#include "n2s/model.hpp"
#include "n2s/sequence.hpp"
#include "n2s/walk_count.hpp"

namespace n2s {
namespace {

using nlohmann::json;
using testing::read_bytes;
using testing::run_cli;
using testing::TempDir;

class Cli : public ::testing::Test {
 protected:
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  testing::CliResult run(const std::string& args) { return run_cli(args, dir_.path()); }

  /// Generates a small denoise task and its L-hop sequences under `tag`.
  void prepare(const std::string& tag, unsigned hops, std::size_t n = 400) {
    ASSERT_EQ(run("gen-synth --kind planted-color-denoise --n " + std::to_string(n) + " --seed 4 --out-dir " + p(tag))
                  .exit_code,
              0);
    ASSERT_EQ(run("precompute --edges " + p(tag + "/edges.txt") + " --features " + p(tag + "/features.bin") +
                  " --hops " + std::to_string(hops) + " --out " + p(tag + "/seq.n2sq"))
                  .exit_code,
              0);
  }

  std::string write_config(const std::string& tag, const std::string& head, unsigned hops,
                           const std::string& checkpoint, const std::string& log) {
    json cfg = {{"seed", 3},
                {"batch_size", 64},
                {"learning_rate", 0.01},
                {"max_epochs", 8},
                {"patience", 3},
                {"model",
                 {{"head", head}, {"L", hops}, {"d", 2}, {"d_hidden", 8}, {"num_classes", 2}, {"dropout_rate", 0.2}}},
                {"sequences", p(tag + "/seq.n2sq")},
                {"labels", p(tag + "/labels.bin")},
                {"split", p(tag + "/split.bin")},
                {"checkpoint", p(checkpoint)},
                {"metrics_log", p(log)}};
    const std::string path = p(checkpoint + ".json");
    std::ofstream(path) << cfg.dump(2);
    return path;
  }

  TempDir dir_{"cli"};
};

TEST_F(Cli, MissingEdgesIsUsageError) {
  const auto r = run("precompute --features x.bin --hops 2 --out y");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("--edges"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownFlagsAndSubcommandsAreRejected) {
  EXPECT_EQ(run("precompute --edges a --features b --hops 1 --out c --bogus 1").exit_code, 1);
  EXPECT_EQ(run("frobnicate").exit_code, 1);
  EXPECT_EQ(run("").exit_code, 1);
  EXPECT_EQ(run("--help").exit_code, 0);
}

TEST_F(Cli, ZeroHopsCopiesFeaturePayload) {
  prepare("t", 0);
  const std::string features = read_bytes(dir_ / "t/features.bin");
  const std::string seq = read_bytes(dir_ / "t/seq.n2sq");
  EXPECT_EQ(seq.substr(24), features.substr(16));
}

TEST_F(Cli, PathGraphSlotsMatchWalkCounts) {
  testing::write_text(dir_ / "path.txt", "0 1\n1 2\n2 3\n");
  save_features(FeatureMatrix(4, 2, {1, 0, 0, 1, 2, 0, 0, -1}), dir_ / "x.bin");
  const auto r = run("precompute --edges " + p("path.txt") + " --features " + p("x.bin") + " --hops 2 --chunk-rows 3 --out " +
                     p("s.n2sq"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json stats = json::parse(r.out);
  EXPECT_EQ(stats["n"], 4);
  EXPECT_EQ(stats["m"], 10);
  EXPECT_EQ(stats["L"], 2);
  EXPECT_EQ(stats["d"], 2);
  EXPECT_TRUE(stats.contains("seconds") && stats.contains("peak_bytes_estimate"));
  EXPECT_NE(r.err.find("\"hops\":2"), std::string::npos);

  const SequenceTensor seq = load_sequence(dir_ / "s.n2sq");
  const FeatureMatrix x = load_features(dir_ / "x.bin");
  const WalkCountMatrix w = walk_count_oracle(add_self_loops(load_edge_list(dir_ / "path.txt", 4)), 2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      double expect = 0;
      for (std::size_t j = 0; j < 4; ++j) expect += static_cast<double>(w.at(i, j)) * x.row(j)[c];
      EXPECT_EQ(seq.slot(i, 2)[c], expect);
    }
}

TEST_F(Cli, ChunkedAndUnchunkedFilesAgree) {
  prepare("t", 3);
  const auto r = run("--threads 3 precompute --edges " + p("t/edges.txt") + " --features " + p("t/features.bin") +
                     " --hops 3 --chunk-rows 7 --out " + p("t/chunked.n2sq"));
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(read_bytes(dir_ / "t/chunked.n2sq"), read_bytes(dir_ / "t/seq.n2sq"));
}

TEST_F(Cli, BadInputsAreRuntimeErrors) {
  testing::write_text(dir_ / "empty.txt", "");
  save_features(FeatureMatrix(2, 1, {1, 2}), dir_ / "x.bin");
  auto r = run("precompute --edges " + p("empty.txt") + " --features " + p("x.bin") + " --hops 1 --out " + p("s"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("empty edge set"), std::string::npos);
  r = run("precompute --edges " + p("nope.txt") + " --features " + p("x.bin") + " --hops 1 --out " + p("s"));
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(Cli, GenSynthIsReproducible) {
  ASSERT_EQ(run("gen-synth --kind sbm --n 300 --seed 8 --classes 3 --out-dir " + p("a")).exit_code, 0);
  ASSERT_EQ(run("gen-synth --kind sbm --n 300 --seed 8 --classes 3 --out-dir " + p("b")).exit_code, 0);
  for (const char* f : {"edges.txt", "features.bin", "labels.bin", "split.bin"})
    EXPECT_EQ(read_bytes(dir_ / "a" / f), read_bytes(dir_ / "b" / f)) << f;
  ASSERT_EQ(run("gen-synth --kind sbm --n 300 --seed 9 --classes 3 --out-dir " + p("c")).exit_code, 0);
  EXPECT_NE(read_bytes(dir_ / "a/edges.txt"), read_bytes(dir_ / "c/edges.txt"));
}

TEST_F(Cli, OrderProbeWithoutHopsIsUsageError) {
  const auto r = run("gen-synth --kind order-probe --hops 0 --n 50 --seed 1 --out-dir " + p("o"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("hops"), std::string::npos);
  EXPECT_EQ(run("gen-synth --kind mystery --n 50 --seed 1 --out-dir " + p("o")).exit_code, 1);
}

TEST_F(Cli, TrainThenEvalReproducesBestValidationMetric) {
  prepare("t", 2);
  const std::string cfg = write_config("t", "conv", 2, "m.ckpt", "log.jsonl");
  const auto train = run("train --config " + cfg);
  ASSERT_EQ(train.exit_code, 0) << train.err;
  const double best = json::parse(train.out)["best_val_metric"].get<double>();

  const auto eval = run("eval --checkpoint " + p("m.ckpt") + " --sequences " + p("t/seq.n2sq") + " --labels " +
                        p("t/labels.bin") + " --split " + p("t/split.bin") + " --part val");
  ASSERT_EQ(eval.exit_code, 0) << eval.err;
  EXPECT_EQ(json::parse(eval.out)["metric"].get<double>(), best);

  double logged = -1;
  std::ifstream log(dir_ / "log.jsonl");
  for (std::string line; std::getline(log, line);) {
    const json rec = json::parse(line);
    if (rec["split"] == "val") logged = std::max(logged, rec["metric"].get<double>());
  }
  EXPECT_EQ(logged, best);
}

TEST_F(Cli, EvalWithWrongHopCountFails) {
  prepare("t", 2);
  const std::string cfg = write_config("t", "attn", 2, "m.ckpt", "log.jsonl");
  ASSERT_EQ(run("train --config " + cfg).exit_code, 0);
  ASSERT_EQ(run("precompute --edges " + p("t/edges.txt") + " --features " + p("t/features.bin") + " --hops 3 --out " +
                p("t/seq3.n2sq"))
                .exit_code,
            0);
  const auto r = run("eval --checkpoint " + p("m.ckpt") + " --sequences " + p("t/seq3.n2sq") + " --labels " +
                     p("t/labels.bin") + " --split " + p("t/split.bin") + " --part test");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("sequence length mismatch"), std::string::npos) << r.err;
}

TEST_F(Cli, RepeatedTrainingIsBitIdenticalAcrossThreadCounts) {
  prepare("t", 2);
  const std::string a = write_config("t", "attn", 2, "a.ckpt", "a.jsonl");
  const std::string b = write_config("t", "attn", 2, "b.ckpt", "b.jsonl");
  ASSERT_EQ(run("--threads 1 train --config " + a).exit_code, 0);
  ASSERT_EQ(run("--threads 4 train --config " + b).exit_code, 0);
  EXPECT_EQ(read_bytes(dir_ / "a.ckpt"), read_bytes(dir_ / "b.ckpt"));
}

TEST_F(Cli, BadConfigIsRuntimeError) {
  testing::write_text(dir_ / "bad.json", R"({"seed": 1, "learning_rat": 0.1})");
  const auto r = run("train --config " + p("bad.json"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("learning_rat"), std::string::npos);
}

TEST_F(Cli, TrainSubgraphDropsNonTrainEdges) {
  prepare("t", 2, 200);
  const auto r = run("precompute --edges " + p("t/edges.txt") + " --features " + p("t/features.bin") +
                     " --hops 2 --train-subgraph " + p("t/split.bin") + " --out " + p("t/train.n2sq"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const SequenceTensor seq = load_sequence(dir_ / "t/train.n2sq");
  const NodeSplit split = load_split(dir_ / "t/split.bin");
  const FeatureMatrix x = load_features(dir_ / "t/features.bin");
  // Held-out nodes are isolated in the subgraph, so their sequence is constant.
  for (NodeId v : split.test)
    for (std::size_t hop = 0; hop <= 2; ++hop) EXPECT_TRUE(std::ranges::equal(seq.slot(v, hop), x.row(v)));
}

TEST_F(Cli, BenchReportsEveryVariant) {
  json cfg = {{"seed", 1},
              {"batch_size", 256},
              {"model", {{"head", "conv"}, {"L", 2}, {"d", 4}, {"d_hidden", 8}, {"num_classes", 3}}}};
  std::ofstream(dir_ / "bench.json") << cfg.dump();
  const auto r = run("bench --config " + p("bench.json") + " --variants 2000:4,2000:8");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json report = json::parse(r.out)["results"];
  ASSERT_EQ(report.size(), 2u);
  for (const auto& v : report) {
    EXPECT_EQ(v["n"], 2000);
    EXPECT_GT(v["epoch_seconds"].get<double>(), 0.0);
    EXPECT_GT(v["precompute_seconds"].get<double>(), 0.0);
  }
  EXPECT_GT(report[1]["m"].get<double>(), report[0]["m"].get<double>());
  EXPECT_EQ(run("bench --config " + p("bench.json") + " --variants 2000").exit_code, 1);
}

}  // namespace
}  // namespace n2s
