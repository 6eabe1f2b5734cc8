// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "n2s/adam.hpp"
#include "n2s/error.hpp"
#include "n2s/graph.hpp"
#include "n2s/graph_io.hpp"
#include "n2s/metrics.hpp"
#include "n2s/model.hpp"
#include "n2s/random.hpp"
#include "n2s/sampler.hpp"
#include "n2s/sequence.hpp"

namespace n2s {

inline constexpr std::size_t kEvalBatchSize = 1024;

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  unsigned max_epochs = 100;
  unsigned patience = 10;  // evaluations without validation improvement
  unsigned eval_every = 1;
  ModelConfig model;
  std::filesystem::path sequences;
  std::filesystem::path labels;
  std::filesystem::path split;
  // Optional extras.
  std::filesystem::path eval_sequences;  // validation/test sequences (inductive runs)
  std::filesystem::path checkpoint;      // best-validation model output
  std::filesystem::path metrics_log;     // JSON-lines epoch log output
  std::uint64_t memory_budget_bytes = 0; // 0 = always load sequences into memory

  void validate() const {
    if (batch_size == 0) throw InvalidArgument("batch_size must be at least 1");
    if (patience == 0) throw InvalidArgument("patience must be at least 1");
    if (eval_every == 0) throw InvalidArgument("eval_every must be at least 1");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be non-negative");
    model.validate();
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate},
                     {"weight_decay", c.weight_decay},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"eval_every", c.eval_every},
                     {"model", c.model},
                     {"sequences", c.sequences.string()},
                     {"labels", c.labels.string()},
                     {"split", c.split.string()},
                     {"eval_sequences", c.eval_sequences.string()},
                     {"checkpoint", c.checkpoint.string()},
                     {"metrics_log", c.metrics_log.string()},
                     {"memory_budget_bytes", c.memory_budget_bytes}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const char* const kKnown[] = {"seed",      "batch_size", "learning_rate",  "weight_decay",
                                       "max_epochs", "patience",  "eval_every",     "model",
                                       "sequences", "labels",     "split",          "eval_sequences",
                                       "checkpoint", "metrics_log", "memory_budget_bytes"};
  for (const auto& [key, value] : j.items())
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown))
      throw InvalidArgument("unknown train config key \"" + key + "\"");
  TrainConfig out;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  auto get_path = [&](const char* key, std::filesystem::path& field) {
    if (j.contains(key)) field = j.at(key).get<std::string>();
  };
  get("seed", out.seed);
  get("batch_size", out.batch_size);
  get("learning_rate", out.learning_rate);
  get("weight_decay", out.weight_decay);
  get("max_epochs", out.max_epochs);
  get("patience", out.patience);
  get("eval_every", out.eval_every);
  if (j.contains("model")) out.model = j.at("model").get<ModelConfig>();
  get_path("sequences", out.sequences);
  get_path("labels", out.labels);
  get_path("split", out.split);
  get_path("eval_sequences", out.eval_sequences);
  get_path("checkpoint", out.checkpoint);
  get_path("metrics_log", out.metrics_log);
  get("memory_budget_bytes", out.memory_budget_bytes);
  out.validate();
  c = out;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in).get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad config " + path.string() + ": " + e.what());
  }
}

/// Node sequences either held in memory or read on demand from an N2SQ file.
class SequenceSource {
 public:
  explicit SequenceSource(SequenceTensor seq) : memory_(std::make_shared<const SequenceTensor>(std::move(seq))) {
    header_ = {memory_->num_nodes(), memory_->hops(), static_cast<std::uint32_t>(memory_->dim())};
  }

  /// Loads the file unless its payload exceeds `memory_budget_bytes`
  /// (0 means no limit), in which case rows are gathered from disk.
  static SequenceSource open(const std::filesystem::path& path, std::uint64_t memory_budget_bytes = 0) {
    auto reader = std::make_shared<SequenceFileReader>(path);
    if (memory_budget_bytes == 0 || reader->header().payload_bytes() <= memory_budget_bytes)
      return SequenceSource(load_sequence(path));
    SequenceSource src;
    src.header_ = reader->header();
    src.file_ = std::move(reader);
    return src;
  }

  std::size_t num_nodes() const { return header_.n; }
  unsigned hops() const { return header_.hops; }
  std::size_t dim() const { return header_.dim; }
  bool in_memory() const { return memory_ != nullptr; }

  /// [nodes.size()][L+1][d] batch tensor.
  Tensor gather(std::span<const NodeId> nodes) const {
    const std::size_t stride = (std::size_t{header_.hops} + 1) * header_.dim;
    Tensor batch({nodes.size(), std::size_t{header_.hops} + 1, header_.dim});
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (nodes[b] >= header_.n) throw InvalidArgument("gather: node " + std::to_string(nodes[b]) + " out of range");
      const std::span<double> dst = batch.values().subspan(b * stride, stride);
      if (memory_)
        std::ranges::copy(memory_->node(nodes[b]), dst.begin());
      else
        file_->read_node(nodes[b], dst);
    }
    return batch;
  }

 private:
  SequenceSource() = default;

  SequenceHeader header_;
  std::shared_ptr<const SequenceTensor> memory_;
  std::shared_ptr<SequenceFileReader> file_;
};

/// One line of the metrics log.
struct EpochRecord {
  unsigned epoch = 0;
  std::string split;
  double loss = 0.0;
  double metric = 0.0;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    return {{"epoch", epoch}, {"split", split}, {"loss", loss}, {"metric", metric}, {"seconds", seconds}};
  }
};

inline void check_compatible(const ModelConfig& model, const SequenceSource& seq, const LabelSet& labels) {
  if (seq.hops() != model.L)
    throw ShapeError("sequence length mismatch: file has L = " + std::to_string(seq.hops()) + ", model expects L = " +
                     std::to_string(model.L));
  if (seq.dim() != model.d)
    throw ShapeError("feature dimension mismatch: file has d = " + std::to_string(seq.dim()) + ", model expects d = " +
                     std::to_string(model.d));
  if (labels.num_nodes() != seq.num_nodes())
    throw ShapeError("label count " + std::to_string(labels.num_nodes()) + " != sequence node count " +
                     std::to_string(seq.num_nodes()));
  if (labels.num_classes() != model.num_classes)
    throw ShapeError("label file has " + std::to_string(labels.num_classes()) + " classes, model expects " +
                     std::to_string(model.num_classes));
  if (labels.kind() != model.task) throw ShapeError("label kind does not match model task");
}

namespace detail {

/// Loss and metric accumulator across batches.
struct EvalAccumulator {
  double loss_sum = 0.0;
  std::size_t samples = 0;
  std::size_t hits = 0;
  ConfusionCounts confusion;
  bool single_label = true;

  void add(const Model& model, const Tensor& logits, double batch_loss, const LabelSet& labels,
           std::span<const NodeId> nodes) {
    loss_sum += batch_loss * static_cast<double>(nodes.size());
    samples += nodes.size();
    single_label = model.config().task == TaskKind::kSingleLabel;
    if (single_label) {
      const auto pred = predict_classes(logits);
      for (std::size_t b = 0; b < nodes.size(); ++b) hits += pred[b] == labels.class_of(nodes[b]);
    } else {
      const auto pred = predict_multilabel(logits);
      const std::size_t c = labels.num_classes();
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        const auto row = std::span<const std::uint8_t>(pred).subspan(b * c, c);
        const auto target = labels.targets_of(nodes[b]);
        confusion += count_confusion(row, target);
        hits += std::ranges::equal(row, target);  // exact-match accuracy
      }
    }
  }

  Metrics finish() const {
    Metrics m;
    if (samples == 0) return m;
    m.loss = loss_sum / static_cast<double>(samples);
    m.accuracy = static_cast<double>(hits) / static_cast<double>(samples);
    // Micro-averaged F1 over one-of-C predictions reduces to accuracy.
    m.f1_micro = single_label ? m.accuracy : f1_micro(confusion);
    return m;
  }
};

inline ops::LossResult batch_loss(const ModelConfig& config, const Tensor& logits, const LabelSet& labels,
                                  std::span<const NodeId> nodes) {
  if (config.task == TaskKind::kSingleLabel) {
    std::vector<std::uint32_t> targets(nodes.size());
    for (std::size_t b = 0; b < nodes.size(); ++b) targets[b] = labels.class_of(nodes[b]);
    return ops::softmax_xent(logits, targets);
  }
  const std::size_t c = labels.num_classes();
  std::vector<std::uint8_t> targets(nodes.size() * c);
  for (std::size_t b = 0; b < nodes.size(); ++b) std::ranges::copy(labels.targets_of(nodes[b]), targets.begin() + b * c);
  return ops::bce_with_logits(logits, targets);
}

}  // namespace detail

/// The validation/early-stopping metric: accuracy or f1-micro by task.
inline double primary_metric(const ModelConfig& config, const Metrics& m) {
  return config.task == TaskKind::kSingleLabel ? m.accuracy : m.f1_micro;
}

/// Inference-mode metrics over `nodes`, in fixed-size batches.
inline Metrics evaluate(const Model& model, const SequenceSource& seq, const LabelSet& labels,
                        std::span<const NodeId> nodes) {
  const auto start = std::chrono::steady_clock::now();
  detail::EvalAccumulator acc;
  for (std::size_t begin = 0; begin < nodes.size(); begin += kEvalBatchSize) {
    const auto batch_nodes = nodes.subspan(begin, std::min(kEvalBatchSize, nodes.size() - begin));
    const Tensor logits = model.logits(seq.gather(batch_nodes));
    const auto loss = detail::batch_loss(model.config(), logits, labels, batch_nodes);
    acc.add(model, logits, loss.loss, labels, batch_nodes);
  }
  Metrics m = acc.finish();
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

/// Mini-batch gradient descent over decoupled node sequences.
///
/// Randomness comes from three streams derived from the seed: parameter
/// init, batch order and dropout masks. Results are independent of the
/// worker thread count.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const SequenceSource& train_seq, const LabelSet& labels,
          std::span<const NodeId> train_nodes)
      : config_(config),
        train_seq_(train_seq),
        labels_(labels),
        init_rng_(make_rng(config.seed, 1)),
        model_(config.model, init_rng_),
        adam_(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay}, model_.parameters()),
        sampler_(train_nodes, config.batch_size, make_rng(config.seed, 2)),
        dropout_rng_(make_rng(config.seed, 3)) {
    config_.validate();
    check_compatible(config_.model, train_seq_, labels_);
  }

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  unsigned epochs_done() const { return epoch_; }

  /// One pass over the training nodes; returns the running train metrics.
  Metrics train_epoch() {
    const auto start = std::chrono::steady_clock::now();
    ++epoch_;
    detail::EvalAccumulator acc;
    const auto batches = sampler_.next_epoch();
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& nodes = batches[bi];
      const Tensor input = train_seq_.gather(nodes);
      model_.zero_grad();
      const Model::Pass pass = model_.forward(input, true, &dropout_rng_);
      const auto loss = detail::batch_loss(model_.config(), pass.logits, labels_, nodes);
      if (!std::isfinite(loss.loss))
        throw NumericError("non-finite training loss " + std::to_string(loss.loss) + " at epoch " +
                           std::to_string(epoch_) + ", batch " + std::to_string(bi));
      model_.backward(pass, loss.dlogits);
      adam_.step(model_.parameters());
      acc.add(model_, pass.logits, loss.loss, labels_, nodes);
    }
    Metrics m = acc.finish();
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return m;
  }

 private:
  TrainConfig config_;
  const SequenceSource& train_seq_;
  const LabelSet& labels_;
  Rng init_rng_;
  Model model_;
  AdamState adam_;
  MinibatchSampler sampler_;
  Rng dropout_rng_;
  unsigned epoch_ = 0;
};

struct TrainResult {
  Model best_model;
  std::vector<EpochRecord> log;
  std::optional<double> best_val_metric;  // empty when no validation ran
  unsigned best_epoch = 0;
  unsigned epochs_run = 0;
};

using RecordCallback = std::function<void(const EpochRecord&)>;

/// Trains with early stopping on the validation metric. The returned model
/// is the best-validation snapshot (the final one if validation never ran).
/// `eval_seq` supplies validation sequences; pass the training source for
/// transductive runs.
inline TrainResult train(const TrainConfig& config, const SequenceSource& train_seq, const SequenceSource& eval_seq,
                         const LabelSet& labels, const NodeSplit& split, const RecordCallback& on_record = {}) {
  split.validate(labels.num_nodes());
  check_compatible(config.model, eval_seq, labels);
  Trainer trainer(config, train_seq, labels, split.train);
  std::vector<EpochRecord> log;
  auto record = [&](EpochRecord r) {
    if (on_record) on_record(r);
    log.push_back(std::move(r));
  };

  std::optional<Model> best;
  std::optional<double> best_metric;
  unsigned best_epoch = 0, stale = 0;
  for (unsigned epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const Metrics tm = trainer.train_epoch();
    record({epoch, "train", tm.loss, primary_metric(config.model, tm), tm.seconds});
    if (epoch % config.eval_every != 0 || split.val.empty()) continue;
    const Metrics vm = evaluate(trainer.model(), eval_seq, labels, split.val);
    const double metric = primary_metric(config.model, vm);
    record({epoch, "val", vm.loss, metric, vm.seconds});
    if (!best_metric || metric > *best_metric) {
      best_metric = metric;
      best_epoch = epoch;
      best = trainer.model();
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (!best) {
    best = trainer.model();
    best_epoch = trainer.epochs_done();
  }
  return TrainResult{std::move(*best), std::move(log), best_metric, best_epoch, trainer.epochs_done()};
}

inline void write_metrics_log(const std::filesystem::path& path, std::span<const EpochRecord> log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& r : log) out << r.to_json().dump() << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

/// File-driven training: reads sequences, labels and split named in the
/// config, writes the checkpoint and metrics log if those paths are set.
inline TrainResult train_from_files(const TrainConfig& config, const RecordCallback& on_record = {}) {
  const SequenceSource train_seq = SequenceSource::open(config.sequences, config.memory_budget_bytes);
  std::optional<SequenceSource> separate_eval;
  if (!config.eval_sequences.empty())
    separate_eval = SequenceSource::open(config.eval_sequences, config.memory_budget_bytes);
  const LabelSet labels = load_labels(config.labels);
  const NodeSplit split = load_split(config.split);
  TrainResult result = train(config, train_seq, separate_eval ? *separate_eval : train_seq, labels, split, on_record);
  if (!config.checkpoint.empty()) save_model(config.checkpoint, result.best_model);
  if (!config.metrics_log.empty()) write_metrics_log(config.metrics_log, result.log);
  return result;
}

}  // namespace n2s
