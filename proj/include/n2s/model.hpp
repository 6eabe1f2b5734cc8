// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "n2s/checkpoint.hpp"
#include "n2s/error.hpp"
#include "n2s/graph.hpp"
#include "n2s/ops.hpp"
#include "n2s/random.hpp"
#include "n2s/tensor.hpp"

namespace n2s {

enum class HeadKind { kConv, kAttn };

inline constexpr double kSeqNormEpsilon = 1e-5;
inline constexpr double kQueryInitStddev = 0.1;

struct ModelConfig {
  HeadKind head = HeadKind::kConv;
  unsigned L = 2;                    // hops; sequences have L + 1 positions
  std::size_t d = 1;                 // input feature width
  std::size_t d_hidden = 64;         // width after the per-position linear map
  std::uint32_t num_classes = 2;
  std::size_t kernel_size = 3;       // conv head only, odd
  bool use_positional_encoding = true;  // attn head only
  double dropout_rate = 0.0;
  TaskKind task = TaskKind::kSingleLabel;

  std::size_t positions() const { return std::size_t{L} + 1; }

  void validate() const {
    if (d == 0) throw InvalidArgument("model d must be at least 1");
    if (d_hidden == 0) throw InvalidArgument("model d_hidden must be at least 1");
    if (num_classes == 0) throw InvalidArgument("model num_classes must be at least 1");
    if (head == HeadKind::kConv && kernel_size % 2 == 0)
      throw InvalidArgument("kernel_size must be odd, got " + std::to_string(kernel_size));
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout_rate must lie in [0, 1)");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline std::string to_string(HeadKind h) { return h == HeadKind::kConv ? "conv" : "attn"; }
inline std::string to_string(TaskKind t) { return t == TaskKind::kSingleLabel ? "single-label" : "multi-label"; }

inline HeadKind parse_head(std::string_view s) {
  if (s == "conv") return HeadKind::kConv;
  if (s == "attn") return HeadKind::kAttn;
  throw InvalidArgument("unknown head \"" + std::string(s) + "\" (expected conv or attn)");
}

inline TaskKind parse_task(std::string_view s) {
  if (s == "single-label") return TaskKind::kSingleLabel;
  if (s == "multi-label") return TaskKind::kMultiLabel;
  throw InvalidArgument("unknown task \"" + std::string(s) + "\" (expected single-label or multi-label)");
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"head", to_string(c.head)},
                     {"L", c.L},
                     {"d", c.d},
                     {"d_hidden", c.d_hidden},
                     {"num_classes", c.num_classes},
                     {"kernel_size", c.kernel_size},
                     {"use_positional_encoding", c.use_positional_encoding},
                     {"dropout_rate", c.dropout_rate},
                     {"task", to_string(c.task)}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  static const char* const kKnown[] = {"head",        "L",           "d",
                                       "d_hidden",    "num_classes", "kernel_size",
                                       "use_positional_encoding",    "dropout_rate", "task"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown))
      throw InvalidArgument("unknown model config key \"" + key + "\"");
  }
  ModelConfig out;
  if (j.contains("head")) out.head = parse_head(j.at("head").get<std::string>());
  if (j.contains("L")) out.L = j.at("L").get<unsigned>();
  if (j.contains("d")) out.d = j.at("d").get<std::size_t>();
  if (j.contains("d_hidden")) out.d_hidden = j.at("d_hidden").get<std::size_t>();
  if (j.contains("num_classes")) out.num_classes = j.at("num_classes").get<std::uint32_t>();
  if (j.contains("kernel_size")) out.kernel_size = j.at("kernel_size").get<std::size_t>();
  if (j.contains("use_positional_encoding")) out.use_positional_encoding = j.at("use_positional_encoding").get<bool>();
  if (j.contains("dropout_rate")) out.dropout_rate = j.at("dropout_rate").get<double>();
  if (j.contains("task")) out.task = parse_task(j.at("task").get<std::string>());
  out.validate();
  c = out;
}

/// Closed-form parameter count. The positional-encoding switch contributes
/// nothing: the codes are fixed, not learned.
inline std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t p = c.positions(), h = c.d_hidden;
  std::size_t count = p * h * c.d    // per-position linear maps
                      + 2 * p * h    // per-position gamma, beta
                      + c.num_classes * h + c.num_classes;  // classifier
  if (c.head == HeadKind::kConv)
    count += 2 * (h * h * c.kernel_size + h);
  else
    count += h;  // query
  return count;
}

/// Parameter shapes in creation order; also used to validate checkpoints.
inline std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& c) {
  const std::size_t p = c.positions(), h = c.d_hidden;
  std::vector<std::pair<std::string, Shape>> shapes = {
      {"seq.weight", {p, h, c.d}}, {"seq.gamma", {p, h}}, {"seq.beta", {p, h}}};
  if (c.head == HeadKind::kConv) {
    shapes.push_back({"conv1.weight", {h, h, c.kernel_size}});
    shapes.push_back({"conv1.bias", {h}});
    shapes.push_back({"conv2.weight", {h, h, c.kernel_size}});
    shapes.push_back({"conv2.bias", {h}});
  } else {
    shapes.push_back({"attn.query", {h}});
  }
  shapes.push_back({"classifier.weight", {c.num_classes, h}});
  shapes.push_back({"classifier.bias", {c.num_classes}});
  return shapes;
}

/// Sequence classifier: per-position linear -> seqnorm -> dropout -> head
/// -> affine classifier, where the head is either
///   conv: conv1d -> ReLU -> conv1d -> mean over positions, or
///   attn: (+ positional codes) -> learnable-query attention.
class Model {
 public:
  /// Everything the backward pass needs from one forward evaluation.
  struct Pass {
    Tensor input;
    ops::SeqNormCache norm;
    ops::DropoutMask dropout;
    Tensor head_input;   // post-dropout sequence (attn: after positional codes)
    Tensor conv1_out;    // pre-ReLU
    Tensor relu_out;
    Tensor alpha;        // attention weights
    Tensor pooled;       // classifier input
    Tensor logits;
  };

  Model(const ModelConfig& config, Rng& init_rng) : config_(config) {
    config_.validate();
    for (auto& [name, shape] : parameter_shapes(config_)) params_.emplace_back(name, Tensor(shape));
    init_parameters(init_rng);
    finish_setup();
  }

  /// Rebuilds a model from stored parameters (names and shapes must match).
  static Model from_parameters(const ModelConfig& config, std::vector<Parameter> params) {
    Model m;
    m.config_ = config;
    m.config_.validate();
    const auto shapes = parameter_shapes(m.config_);
    if (params.size() != shapes.size())
      throw FormatError("checkpoint has " + std::to_string(params.size()) + " parameters, model expects " +
                        std::to_string(shapes.size()));
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (params[i].name != shapes[i].first)
        throw FormatError("checkpoint parameter " + std::to_string(i) + " is \"" + params[i].name + "\", expected \"" +
                          shapes[i].first + "\"");
      params[i].tensor.expect_shape(shapes[i].second, params[i].name.c_str());
      params[i].tensor.enable_grad();
    }
    m.params_ = std::move(params);
    m.finish_setup();
    return m;
  }

  const ModelConfig& config() const { return config_; }
  std::span<Parameter> parameters() { return params_; }
  std::span<const Parameter> parameters() const { return params_; }

  Parameter& parameter(std::string_view name) {
    for (auto& p : params_)
      if (p.name == name) return p;
    throw InvalidArgument("no parameter named \"" + std::string(name) + "\"");
  }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  const Tensor& positional_codes() const { return positional_; }

  /// batch: [B][L+1][d]. `dropout_rng` is only consulted when training with
  /// a non-zero dropout rate.
  Pass forward(const Tensor& batch, bool training, Rng* dropout_rng = nullptr) const {
    if (batch.rank() != 3 || batch.dim(1) != config_.positions() || batch.dim(2) != config_.d)
      throw ShapeError("model input must be [B][" + std::to_string(config_.positions()) + "][" +
                       std::to_string(config_.d) + "], got " + shape_string(batch.shape()));
    const bool use_dropout = training && config_.dropout_rate > 0.0;
    if (use_dropout && dropout_rng == nullptr) throw InvalidArgument("training with dropout needs an rng");

    Pass pass;
    pass.input = batch;
    const Tensor y = ops::linear_fwd(batch, weight());
    const Tensor o = ops::seqnorm_fwd(y, gamma(), beta(), kSeqNormEpsilon, &pass.norm);
    Rng unused;
    pass.head_input = ops::dropout_fwd(o, config_.dropout_rate, use_dropout ? *dropout_rng : unused, use_dropout,
                                       &pass.dropout);
    if (config_.head == HeadKind::kConv) {
      pass.conv1_out = ops::conv1d_fwd(pass.head_input, params_[kConv1W].tensor, params_[kConv1B].tensor);
      pass.relu_out = ops::relu_fwd(pass.conv1_out);
      const Tensor conv2_out = ops::conv1d_fwd(pass.relu_out, params_[kConv2W].tensor, params_[kConv2B].tensor);
      pass.pooled = ops::mean_pool_fwd(conv2_out);
    } else {
      if (config_.use_positional_encoding) ops::add_positional(pass.head_input, positional_);
      pass.pooled = ops::query_attention_fwd(pass.head_input, params_[kQuery].tensor, &pass.alpha);
    }
    pass.logits = ops::affine_fwd(pass.pooled, params_[classifier_w_].tensor, params_[classifier_b_].tensor);
    return pass;
  }

  Tensor logits(const Tensor& batch) const { return forward(batch, false).logits; }

  /// Accumulates parameter gradients for d(loss)/d(logits) = dlogits.
  void backward(const Pass& pass, const Tensor& dlogits) {
    Tensor dpooled;
    ops::affine_bwd(pass.pooled, params_[classifier_w_].tensor, dlogits, &dpooled, params_[classifier_w_].tensor.grad(),
                    params_[classifier_b_].tensor.grad());
    Tensor dhead;
    if (config_.head == HeadKind::kConv) {
      const Tensor dconv2 = ops::mean_pool_bwd(dpooled, config_.positions());
      Tensor drelu;
      ops::conv1d_bwd(pass.relu_out, params_[kConv2W].tensor, dconv2, &drelu, params_[kConv2W].tensor.grad(),
                      params_[kConv2B].tensor.grad());
      const Tensor dconv1 = ops::relu_bwd(pass.conv1_out, drelu);
      ops::conv1d_bwd(pass.head_input, params_[kConv1W].tensor, dconv1, &dhead, params_[kConv1W].tensor.grad(),
                      params_[kConv1B].tensor.grad());
    } else {
      dhead = ops::query_attention_bwd(pass.head_input, params_[kQuery].tensor, pass.alpha, pass.pooled, dpooled,
                                       params_[kQuery].tensor.grad());
    }
    const Tensor dnorm = ops::dropout_bwd(dhead, pass.dropout);
    const Tensor dy = ops::seqnorm_bwd(dnorm, gamma(), pass.norm, params_[kGamma].tensor.grad(),
                                       params_[kBeta].tensor.grad());
    ops::linear_bwd(pass.input, weight(), dy, nullptr, params_[kWeight].tensor.grad());
  }

 private:
  static constexpr std::size_t kWeight = 0, kGamma = 1, kBeta = 2;
  static constexpr std::size_t kConv1W = 3, kConv1B = 4, kConv2W = 5, kConv2B = 6;
  static constexpr std::size_t kQuery = 3;

  Model() = default;

  const Tensor& weight() const { return params_[kWeight].tensor; }
  const Tensor& gamma() const { return params_[kGamma].tensor; }
  const Tensor& beta() const { return params_[kBeta].tensor; }

  void finish_setup() {
    classifier_w_ = params_.size() - 2;
    classifier_b_ = params_.size() - 1;
    positional_ = ops::positional_encoding(config_.L, config_.d_hidden);
  }

  static void fill_uniform(Tensor& t, double fan_in, double fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.values()) v = uniform(rng, -limit, limit);
  }

  void init_parameters(Rng& rng) {
    const double h = static_cast<double>(config_.d_hidden);
    fill_uniform(params_[kWeight].tensor, static_cast<double>(config_.d), h, rng);
    std::ranges::fill(params_[kGamma].tensor.values(), 1.0);
    if (config_.head == HeadKind::kConv) {
      const double k = static_cast<double>(config_.kernel_size);
      fill_uniform(params_[kConv1W].tensor, h * k, h * k, rng);
      fill_uniform(params_[kConv2W].tensor, h * k, h * k, rng);
    } else {
      for (double& v : params_[kQuery].tensor.values()) v = normal(rng, 0.0, kQueryInitStddev);
    }
    fill_uniform(params_[params_.size() - 2].tensor, h, static_cast<double>(config_.num_classes), rng);
  }

  ModelConfig config_;
  std::vector<Parameter> params_;
  std::size_t classifier_w_ = 0;
  std::size_t classifier_b_ = 0;
  Tensor positional_;
};

/// Argmax per row; ties resolve to the lowest class index.
inline std::vector<std::uint32_t> predict_classes(const Tensor& logits) {
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  std::vector<std::uint32_t> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < classes; ++c)
      if (logits[b * classes + c] > logits[b * classes + best]) best = c;
    out[b] = best;
  }
  return out;
}

/// sigmoid(z) >= 0.5, i.e. z >= 0, per entry.
inline std::vector<std::uint8_t> predict_multilabel(const Tensor& logits) {
  std::vector<std::uint8_t> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] >= 0.0 ? 1 : 0;
  return out;
}

/// Checkpoint with the model config as its JSON block.
inline void save_model(const std::filesystem::path& path, const Model& model) {
  save_checkpoint(path, model.parameters(), nlohmann::json(model.config()).dump());
}

inline Model load_model(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config_json.empty()) throw FormatError("checkpoint " + path.string() + " carries no model config");
  ModelConfig config;
  try {
    config = nlohmann::json::parse(ckpt.config_json).get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad model config in " + path.string() + ": " + e.what());
  }
  return Model::from_parameters(config, std::move(ckpt.params));
}

}  // namespace n2s
