// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Finite-difference gradient checks for every differentiable op and for
// whole models. Each check draws random shapes and values from `seed` and
// returns the worst relative error over all checked inputs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "n2s/grad_check.hpp"
#include "n2s/model.hpp"
#include "n2s/ops.hpp"
#include "n2s/train.hpp"

namespace n2s::testing {

struct GradCase {
  std::string name;
  std::function<double(std::uint64_t seed)> run;
};

namespace detail {

inline std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = normal(rng, 0.0, scale);
  return t;
}

inline double weighted_sum(const Tensor& y, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += y[k] * weights[k];
  return s;
}

inline double check(const std::function<double()>& loss, Tensor& x, std::span<const double> analytic) {
  return grad_check(loss, x.values(), analytic).max_relative_error;
}

}  // namespace detail

inline double grad_linear(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 101);
  const std::size_t batch = draw(rng, 1, 3), positions = draw(rng, 1, 5), in = draw(rng, 1, 5), out = draw(rng, 1, 5);
  Tensor x = random_tensor({batch, positions, in}, rng);
  Tensor w = random_tensor({positions, out, in}, rng);
  const Tensor r = random_tensor({batch, positions, out}, rng);
  Tensor dx;
  std::vector<double> dw(w.size(), 0.0);
  ops::linear_bwd(x, w, r, &dx, dw);
  auto loss = [&] { return weighted_sum(ops::linear_fwd(x, w), r); };
  return std::max(check(loss, x, dx.values()), check(loss, w, dw));
}

inline double grad_seqnorm(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 102);
  const std::size_t batch = draw(rng, 1, 3), positions = draw(rng, 1, 5), width = draw(rng, 2, 6);
  Tensor y = random_tensor({batch, positions, width}, rng);
  Tensor gamma = random_tensor({positions, width}, rng);
  Tensor beta = random_tensor({positions, width}, rng);
  const Tensor r = random_tensor({batch, positions, width}, rng);
  const double eps = 1e-5;
  ops::SeqNormCache cache;
  ops::seqnorm_fwd(y, gamma, beta, eps, &cache);
  std::vector<double> dgamma(gamma.size(), 0.0), dbeta(beta.size(), 0.0);
  const Tensor dy = ops::seqnorm_bwd(r, gamma, cache, dgamma, dbeta);
  auto loss = [&] { return weighted_sum(ops::seqnorm_fwd(y, gamma, beta, eps), r); };
  return std::max({check(loss, y, dy.values()), check(loss, gamma, dgamma), check(loss, beta, dbeta)});
}

inline double grad_relu(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 103);
  Tensor x = random_tensor({draw(rng, 1, 3), draw(rng, 1, 5), draw(rng, 1, 4)}, rng);
  for (double& v : x.values())
    if (std::abs(v) < 1e-3) v = v < 0 ? -1e-3 : 1e-3;  // keep clear of the kink
  const Tensor r = random_tensor(x.shape(), rng);
  const Tensor dx = ops::relu_bwd(x, r);
  return check([&] { return weighted_sum(ops::relu_fwd(x), r); }, x, dx.values());
}

inline double grad_conv1d(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 104);
  const std::size_t batch = draw(rng, 1, 3), positions = draw(rng, 1, 6), cin = draw(rng, 1, 4), cout = draw(rng, 1, 4);
  const std::size_t k = draw(rng, 0, 1) ? 5 : 3;
  Tensor x = random_tensor({batch, positions, cin}, rng);
  Tensor kernels = random_tensor({cout, cin, k}, rng);
  Tensor bias = random_tensor({cout}, rng);
  const Tensor r = random_tensor({batch, positions, cout}, rng);
  Tensor dx;
  std::vector<double> dk(kernels.size(), 0.0), db(cout, 0.0);
  ops::conv1d_bwd(x, kernels, r, &dx, dk, db);
  auto loss = [&] { return weighted_sum(ops::conv1d_fwd(x, kernels, bias), r); };
  return std::max({check(loss, x, dx.values()), check(loss, kernels, dk), check(loss, bias, db)});
}

inline double grad_mean_pool(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 105);
  const std::size_t batch = draw(rng, 1, 3), positions = draw(rng, 1, 6), width = draw(rng, 1, 4);
  Tensor x = random_tensor({batch, positions, width}, rng);
  const Tensor r = random_tensor({batch, width}, rng);
  const Tensor dx = ops::mean_pool_bwd(r, positions);
  return check([&] { return weighted_sum(ops::mean_pool_fwd(x), r); }, x, dx.values());
}

inline double grad_attention(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 106);
  const std::size_t batch = draw(rng, 1, 3), positions = draw(rng, 1, 6), width = draw(rng, 1, 4);
  Tensor keys = random_tensor({batch, positions, width}, rng);
  Tensor query = random_tensor({width}, rng);
  const Tensor r = random_tensor({batch, width}, rng);
  Tensor alpha;
  const Tensor out = ops::query_attention_fwd(keys, query, &alpha);
  std::vector<double> dq(width, 0.0);
  const Tensor dkeys = ops::query_attention_bwd(keys, query, alpha, out, r, dq);
  auto loss = [&] { return weighted_sum(ops::query_attention_fwd(keys, query, nullptr), r); };
  return std::max(check(loss, keys, dkeys.values()), check(loss, query, dq));
}

inline double grad_affine(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 107);
  const std::size_t batch = draw(rng, 1, 4), width = draw(rng, 1, 5), classes = draw(rng, 1, 5);
  Tensor x = random_tensor({batch, width}, rng);
  Tensor w = random_tensor({classes, width}, rng);
  Tensor bias = random_tensor({classes}, rng);
  const Tensor r = random_tensor({batch, classes}, rng);
  Tensor dx;
  std::vector<double> dw(w.size(), 0.0), db(classes, 0.0);
  ops::affine_bwd(x, w, r, &dx, dw, db);
  auto loss = [&] { return weighted_sum(ops::affine_fwd(x, w, bias), r); };
  return std::max({check(loss, x, dx.values()), check(loss, w, dw), check(loss, bias, db)});
}

inline double grad_softmax_xent(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 108);
  const std::size_t batch = draw(rng, 1, 4), classes = draw(rng, 2, 6);
  Tensor logits = random_tensor({batch, classes}, rng, 3.0);
  std::vector<std::uint32_t> targets(batch);
  for (auto& t : targets) t = static_cast<std::uint32_t>(uniform_index(rng, classes));
  const auto res = ops::softmax_xent(logits, targets);
  return check([&] { return ops::softmax_xent(logits, targets).loss; }, logits, res.dlogits.values());
}

inline double grad_bce(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 109);
  const std::size_t batch = draw(rng, 1, 4), classes = draw(rng, 1, 6);
  Tensor logits = random_tensor({batch, classes}, rng, 3.0);
  std::vector<std::uint8_t> targets(batch * classes);
  for (auto& t : targets) t = bernoulli(rng, 0.5);
  const auto res = ops::bce_with_logits(logits, targets);
  return check([&] { return ops::bce_with_logits(logits, targets).loss; }, logits, res.dlogits.values());
}

inline double grad_dropout(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 110);
  Tensor x = random_tensor({draw(rng, 1, 3), draw(rng, 1, 5), draw(rng, 1, 4)}, rng);
  const Tensor r = random_tensor(x.shape(), rng);
  const double rate = 0.5 * uniform01(rng);
  const Rng mask_rng = rng;
  Rng first = mask_rng;
  ops::DropoutMask mask;
  ops::dropout_fwd(x, rate, first, true, &mask);
  const Tensor dx = ops::dropout_bwd(r, mask);
  auto loss = [&] {
    Rng replay = mask_rng;
    return weighted_sum(ops::dropout_fwd(x, rate, replay, true, nullptr), r);
  };
  return check(loss, x, dx.values());
}

inline double grad_positional(std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 111);
  const std::size_t batch = draw(rng, 1, 3), positions = draw(rng, 1, 6), width = draw(rng, 1, 6);
  Tensor x = random_tensor({batch, positions, width}, rng);
  const Tensor pe = ops::positional_encoding(static_cast<unsigned>(positions - 1), width);
  const Tensor r = random_tensor(x.shape(), rng);
  auto loss = [&] {
    Tensor shifted = x;
    ops::add_positional(shifted, pe);
    return weighted_sum(shifted, r);
  };
  return check(loss, x, r.values());  // the shift has identity Jacobian
}

inline std::vector<GradCase> op_grad_cases() {
  return {{"linear", grad_linear},       {"seqnorm", grad_seqnorm},           {"relu", grad_relu},
          {"conv1d", grad_conv1d},       {"mean_pool", grad_mean_pool},       {"query_attention", grad_attention},
          {"affine", grad_affine},       {"softmax_xent", grad_softmax_xent}, {"bce", grad_bce},
          {"dropout", grad_dropout},     {"positional", grad_positional}};
}

/// End-to-end: gradient of the batch loss with respect to every parameter.
inline double grad_model(HeadKind head, bool positional, std::uint64_t seed) {
  using namespace detail;
  Rng rng = make_rng(seed, 120 + static_cast<std::uint64_t>(head) * 2 + positional);
  ModelConfig config;
  config.head = head;
  config.use_positional_encoding = positional;
  config.L = static_cast<unsigned>(draw(rng, 0, 4));
  config.d = draw(rng, 1, 5);
  config.d_hidden = draw(rng, 2, 5);
  config.num_classes = static_cast<std::uint32_t>(draw(rng, 2, 4));
  config.kernel_size = draw(rng, 0, 1) ? 3 : 1;
  config.dropout_rate = draw(rng, 0, 1) ? 0.2 : 0.0;
  config.task = draw(rng, 0, 3) == 0 ? TaskKind::kMultiLabel : TaskKind::kSingleLabel;
  Model model(config, rng);
  for (auto& p : model.parameters())  // move off the symmetric initial point
    for (double& v : p.tensor.values()) v += normal(rng, 0.0, 0.3);

  const std::size_t batch = draw(rng, 1, 4);
  const Tensor input = random_tensor({batch, config.positions(), config.d}, rng);
  std::vector<NodeId> nodes(batch);
  for (std::size_t b = 0; b < batch; ++b) nodes[b] = static_cast<NodeId>(b);
  const LabelSet labels = [&] {
    if (config.task == TaskKind::kSingleLabel) {
      std::vector<std::uint32_t> ids(batch);
      for (auto& c : ids) c = static_cast<std::uint32_t>(uniform_index(rng, config.num_classes));
      return LabelSet::single(config.num_classes, ids);
    }
    std::vector<std::uint8_t> bits(batch * config.num_classes);
    for (auto& b : bits) b = bernoulli(rng, 0.5);
    return LabelSet::multi(config.num_classes, batch, bits);
  }();
  const Rng dropout_rng = rng;

  auto loss = [&] {
    Rng replay = dropout_rng;
    const Model::Pass pass = model.forward(input, true, &replay);
    return n2s::detail::batch_loss(config, pass.logits, labels, nodes).loss;
  };
  Rng replay = dropout_rng;
  model.zero_grad();
  const Model::Pass pass = model.forward(input, true, &replay);
  model.backward(pass, n2s::detail::batch_loss(config, pass.logits, labels, nodes).dlogits);

  double worst = 0.0;
  for (auto& p : model.parameters()) {
    const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    worst = std::max(worst, grad_check(loss, p.tensor.values(), analytic).max_relative_error);
  }
  return worst;
}

}  // namespace n2s::testing
