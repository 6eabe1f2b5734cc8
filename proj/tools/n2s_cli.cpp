// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

// n2s: command-line front end for the sequence pipeline.
//
//   n2s precompute --edges E --features F --hops L --out S [--chunk-rows R]
//   n2s train      --config C
//   n2s eval       --checkpoint M --sequences S --labels Y --split P [--part val]
//   n2s gen-synth  --kind K --n N --seed S --out-dir D [generator options]
//   n2s bench      --config C --variants n:deg,n:deg
//
// Exit status: 0 on success, 1 on a usage error, 2 on a runtime failure.
// Logs go to stderr; machine-readable results go to stdout as JSON.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "n2s/bench.hpp"
#include "n2s/graph.hpp"
#include "n2s/graph_io.hpp"
#include "n2s/parallel.hpp"
#include "n2s/precompute.hpp"
#include "n2s/sequence.hpp"
#include "n2s/synthetic.hpp"
#include "n2s/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Generator preconditions are reported as usage errors, everything raised
// while the pipeline runs as runtime errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_resolved(const std::string& command, const json& resolved) {
  std::cerr << "n2s " << command << " config: " << resolved.dump() << '\n';
}

struct PrecomputeArgs {
  fs::path edges, features, out, subgraph_split;
  unsigned hops = 0;
  std::size_t chunk_rows = 0;
};

int run_precompute(const PrecomputeArgs& a) {
  print_resolved("precompute", {{"edges", a.edges.string()},
                                {"features", a.features.string()},
                                {"hops", a.hops},
                                {"chunk_rows", a.chunk_rows},
                                {"out", a.out.string()},
                                {"train_subgraph", a.subgraph_split.string()},
                                {"threads", n2s::num_threads()}});
  const n2s::FeatureMatrix x = n2s::load_features(a.features);
  n2s::Graph g = n2s::load_edge_list(a.edges, static_cast<n2s::NodeId>(x.rows()));
  if (!a.subgraph_split.empty()) {
    const auto [split, n] = n2s::load_split_with_size(a.subgraph_split);
    if (n != x.rows())
      throw n2s::ShapeError("split covers " + std::to_string(n) + " nodes, features have " + std::to_string(x.rows()));
    g = n2s::induced_subgraph(g, split.train);
  }
  g = n2s::add_self_loops(g);

  n2s::PrecomputeStats stats;
  if (a.chunk_rows > 0) {
    stats = n2s::neighbor2seq_chunked(g, x, a.hops, a.chunk_rows, a.out);
  } else {
    const auto start = std::chrono::steady_clock::now();
    const n2s::SequenceTensor seq = n2s::neighbor2seq(g, x, a.hops);
    n2s::save_sequence(seq, a.out);
    stats.n = x.rows();
    stats.m = g.num_edges();
    stats.hops = a.hops;
    stats.dim = x.cols();
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats.peak_bytes_estimate = (seq.values().size() + 2 * x.values().size()) * sizeof(double) +
                                (g.num_nodes() + 1) * sizeof(n2s::EdgeOffset) + g.num_edges() * sizeof(n2s::NodeId);
  }
  std::cout << json{{"n", stats.n},
                    {"m", stats.m},
                    {"L", stats.hops},
                    {"d", stats.dim},
                    {"seconds", stats.seconds},
                    {"peak_bytes_estimate", stats.peak_bytes_estimate}}
                   .dump()
            << '\n';
  return 0;
}

int run_train(const fs::path& config_path) {
  const n2s::TrainConfig config = n2s::load_train_config(config_path);
  json resolved = config;
  resolved["threads"] = n2s::num_threads();
  print_resolved("train", resolved);
  const n2s::TrainResult result = n2s::train_from_files(config, [](const n2s::EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << ' ' << r.split << " loss=" << r.loss << " metric=" << r.metric << '\n';
  });
  json out{{"epochs_run", result.epochs_run}, {"best_epoch", result.best_epoch}};
  out["best_val_metric"] = result.best_val_metric ? json(*result.best_val_metric) : json(nullptr);
  std::cout << out.dump() << '\n';
  return 0;
}

struct EvalArgs {
  fs::path checkpoint, sequences, labels, split;
  std::string part = "val";
};

int run_eval(const EvalArgs& a) {
  print_resolved("eval", {{"checkpoint", a.checkpoint.string()},
                          {"sequences", a.sequences.string()},
                          {"labels", a.labels.string()},
                          {"split", a.split.string()},
                          {"part", a.part},
                          {"threads", n2s::num_threads()}});
  const n2s::Model model = n2s::load_model(a.checkpoint);
  const n2s::SequenceSource seq = n2s::SequenceSource::open(a.sequences);
  const n2s::LabelSet labels = n2s::load_labels(a.labels);
  const n2s::NodeSplit split = n2s::load_split(a.split);
  split.validate(labels.num_nodes());
  n2s::check_compatible(model.config(), seq, labels);
  const n2s::Metrics m = n2s::evaluate(model, seq, labels, split.part(a.part));
  std::cout << json{{"part", a.part},
                    {"loss", m.loss},
                    {"accuracy", m.accuracy},
                    {"f1_micro", m.f1_micro},
                    {"metric", n2s::primary_metric(model.config(), m)},
                    {"seconds", m.seconds}}
                   .dump()
            << '\n';
  return 0;
}

struct GenArgs {
  std::string kind;
  n2s::SyntheticSpec spec;
  fs::path out_dir;
};

int run_gen_synth(GenArgs a) {
  try {
    a.spec.kind = n2s::parse_synthetic_kind(a.kind);
    a.spec.validate();
  } catch (const n2s::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const n2s::SyntheticSpec& s = a.spec;
  print_resolved("gen-synth", {{"kind", n2s::to_string(s.kind)},
                               {"n", s.n},
                               {"seed", s.seed},
                               {"classes", s.num_classes},
                               {"p_in", s.p_in},
                               {"p_out", s.p_out},
                               {"noise", s.noise},
                               {"hops", s.hops},
                               {"dim", s.feature_dim},
                               {"signal", s.signal},
                               {"train_fraction", s.train_fraction},
                               {"val_fraction", s.val_fraction},
                               {"out_dir", a.out_dir.string()}});
  const n2s::SyntheticData data = n2s::gen_synthetic(s);
  fs::create_directories(a.out_dir);
  const fs::path edges = a.out_dir / "edges.txt", features = a.out_dir / "features.bin",
                 labels = a.out_dir / "labels.bin", split = a.out_dir / "split.bin";
  n2s::write_edge_list(data.graph, edges);
  n2s::save_features(data.features, features);
  n2s::save_labels(data.labels, labels);
  n2s::save_split(data.split, data.graph.num_nodes(), split);
  std::cout << json{{"n", data.graph.num_nodes()},
                    {"m", data.graph.num_edges()},
                    {"d", data.features.cols()},
                    {"classes", data.labels.num_classes()},
                    {"edges", edges.string()},
                    {"features", features.string()},
                    {"labels", labels.string()},
                    {"split", split.string()}}
                   .dump()
            << '\n';
  return 0;
}

int run_bench(const fs::path& config_path, const std::string& variants_text) {
  std::vector<n2s::BenchVariant> variants;
  try {
    variants = n2s::parse_bench_variants(variants_text);
  } catch (const n2s::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  n2s::BenchOptions options;
  options.train = n2s::load_train_config(config_path);
  json resolved = options.train;
  resolved["variants"] = variants_text;
  resolved["threads"] = n2s::num_threads();
  print_resolved("bench", resolved);
  json report = json::array();
  for (const auto& r : n2s::benchmark_epoch_time(options, variants)) report.push_back(r.to_json());
  std::cout << json{{"results", report}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Precompute node sequences, train and evaluate sequence classifiers on graphs."};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  PrecomputeArgs pre;
  auto* precompute = app.add_subcommand("precompute", "write the hop-sequence tensor for every node");
  precompute->add_option("--edges", pre.edges, "edge list text file")->required();
  precompute->add_option("--features", pre.features, "feature matrix file")->required();
  precompute->add_option("--hops", pre.hops, "number of hops L")->required();
  precompute->add_option("--out", pre.out, "output sequence file")->required();
  precompute->add_option("--chunk-rows", pre.chunk_rows, "rows per chunk (0 = whole graph in memory)");
  precompute->add_option("--train-subgraph", pre.subgraph_split,
                         "split file; propagate over the subgraph induced by its train nodes");

  fs::path train_config;
  auto* train = app.add_subcommand("train", "train a model from a JSON config");
  train->add_option("--config", train_config, "train config JSON")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split part");
  eval->add_option("--checkpoint", ev.checkpoint)->required();
  eval->add_option("--sequences", ev.sequences)->required();
  eval->add_option("--labels", ev.labels)->required();
  eval->add_option("--split", ev.split)->required();
  eval->add_option("--part", ev.part)->check(CLI::IsMember({"train", "val", "test"}));

  GenArgs gen;
  auto* gen_synth = app.add_subcommand("gen-synth", "write a synthetic graph task to a directory");
  gen_synth->add_option("--kind", gen.kind, "planted-color-denoise | order-probe | sbm")->required();
  gen_synth->add_option("--n", gen.spec.n, "labeled node count")->required();
  gen_synth->add_option("--seed", gen.spec.seed)->required();
  gen_synth->add_option("--out-dir", gen.out_dir)->required();
  gen_synth->add_option("--classes", gen.spec.num_classes);
  gen_synth->add_option("--p-in", gen.spec.p_in);
  gen_synth->add_option("--p-out", gen.spec.p_out);
  gen_synth->add_option("--noise", gen.spec.noise, "flip probability (denoise) or noise stddev");
  gen_synth->add_option("--hops", gen.spec.hops, "order-probe chain length");
  gen_synth->add_option("--dim", gen.spec.feature_dim, "order-probe feature width");
  gen_synth->add_option("--signal", gen.spec.signal, "order-probe signal amplitude");
  gen_synth->add_option("--train-fraction", gen.spec.train_fraction);
  gen_synth->add_option("--val-fraction", gen.spec.val_fraction);

  fs::path bench_config;
  std::string bench_variants;
  auto* bench = app.add_subcommand("bench", "time precompute and training epochs on random graphs");
  bench->add_option("--config", bench_config, "train config JSON (model and optimizer settings)")->required();
  bench->add_option("--variants", bench_variants, "comma-separated n:avg_degree pairs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    n2s::set_num_threads(threads);
    if (*precompute) return run_precompute(pre);
    if (*train) return run_train(train_config);
    if (*eval) return run_eval(ev);
    if (*gen_synth) return run_gen_synth(gen);
    if (*bench) return run_bench(bench_config, bench_variants);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
