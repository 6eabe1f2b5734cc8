// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Forward/backward kernels for the sequence heads.
//
// Layout conventions: sequence tensors are [batch][position][channel],
// pooled tensors are [batch][channel]. Backward kernels overwrite input
// gradients and *accumulate* into parameter gradients.
//
// Parameter gradients are reduced over fixed blocks of kSampleBlock samples
// and the block partials are summed in block order, so the result is the
// same bits for any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "n2s/error.hpp"
#include "n2s/parallel.hpp"
#include "n2s/random.hpp"
#include "n2s/tensor.hpp"

namespace n2s::ops {

inline constexpr std::size_t kSampleBlock = 16;
inline constexpr std::size_t kSampleGrain = 8;

namespace detail {

/// fn(begin, end, partials) runs once per sample block with zeroed partial
/// buffers shaped like `grads`; partials are then added to `grads` in block
/// order.
template <class Fn>
void accumulate_blocks(std::size_t batch, std::initializer_list<std::span<double>> grads, Fn&& fn) {
  const std::vector<std::span<double>> targets(grads);
  std::size_t total = 0;
  for (auto g : targets) total += g.size();
  const std::size_t blocks = (batch + kSampleBlock - 1) / kSampleBlock;
  std::vector<double> partial(blocks * total, 0.0);
  parallel_for(blocks, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::span<double>> views(targets.size());
    for (std::size_t blk = lo; blk < hi; ++blk) {
      double* base = partial.data() + blk * total;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        views[t] = std::span<double>(base, targets[t].size());
        base += targets[t].size();
      }
      fn(blk * kSampleBlock, std::min(batch, (blk + 1) * kSampleBlock), std::span<const std::span<double>>(views));
    }
  });
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const double* base = partial.data() + blk * total;
    for (auto g : targets) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += base[k];
      base += g.size();
    }
  }
}

inline void expect_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_string(t.shape()));
}

inline void expect_grad_size(std::span<const double> g, std::size_t size, const char* what) {
  if (g.size() != size) throw ShapeError(std::string(what) + ": gradient buffer has wrong size");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Position-wise linear map: y[b, l] = W_l z[b, l], W of shape [P][out][in].

inline Tensor linear_fwd(const Tensor& x, const Tensor& w) {
  detail::expect_rank(x, 3, "linear_fwd input");
  detail::expect_rank(w, 3, "linear_fwd weight");
  const std::size_t batch = x.dim(0), positions = x.dim(1), in = x.dim(2), out = w.dim(1);
  w.expect_shape({positions, out, in}, "linear_fwd weight");
  Tensor y({batch, positions, out});
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t p = 0; p < positions; ++p) {
            const double* xv = x.data() + (b * positions + p) * in;
            const double* wp = w.data() + p * out * in;
            double* yv = y.data() + (b * positions + p) * out;
            for (std::size_t o = 0; o < out; ++o) {
              double acc = 0.0;
              for (std::size_t c = 0; c < in; ++c) acc += wp[o * in + c] * xv[c];
              yv[o] = acc;
            }
          }
      },
      kSampleGrain);
  return y;
}

/// dx may be null when the input is data.
inline void linear_bwd(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, std::span<double> dw) {
  const std::size_t batch = x.dim(0), positions = x.dim(1), in = x.dim(2), out = w.dim(1);
  dy.expect_shape({batch, positions, out}, "linear_bwd output gradient");
  detail::expect_grad_size(dw, w.size(), "linear_bwd");
  detail::accumulate_blocks(batch, {dw}, [&](std::size_t lo, std::size_t hi, std::span<const std::span<double>> g) {
    for (std::size_t b = lo; b < hi; ++b)
      for (std::size_t p = 0; p < positions; ++p) {
        const double* xv = x.data() + (b * positions + p) * in;
        const double* gv = dy.data() + (b * positions + p) * out;
        double* gw = g[0].data() + p * out * in;
        for (std::size_t o = 0; o < out; ++o)
          for (std::size_t c = 0; c < in; ++c) gw[o * in + c] += gv[o] * xv[c];
      }
  });
  if (dx == nullptr) return;
  *dx = Tensor(x.shape());
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t p = 0; p < positions; ++p) {
            const double* gv = dy.data() + (b * positions + p) * out;
            const double* wp = w.data() + p * out * in;
            double* dxv = dx->data() + (b * positions + p) * in;
            for (std::size_t o = 0; o < out; ++o)
              for (std::size_t c = 0; c < in; ++c) dxv[c] += wp[o * in + c] * gv[o];
          }
      },
      kSampleGrain);
}

// ---------------------------------------------------------------------------
// Per-vector standardization with position-specific affine parameters:
//   o = (y - mean) / sqrt(var + eps) * gamma_l + beta_l
// where mean and var (population, divisor D) are taken over each vector's
// own D entries.

struct SeqNormCache {
  Tensor normalized;            // pre-affine output
  std::vector<double> inv_std;  // one per (batch, position)
};

inline Tensor seqnorm_fwd(const Tensor& y, const Tensor& gamma, const Tensor& beta, double eps,
                          SeqNormCache* cache = nullptr) {
  detail::expect_rank(y, 3, "seqnorm_fwd input");
  const std::size_t batch = y.dim(0), positions = y.dim(1), width = y.dim(2);
  if (width == 0) throw ShapeError("seqnorm_fwd: feature width must be at least 1");
  gamma.expect_shape({positions, width}, "seqnorm_fwd gamma");
  beta.expect_shape({positions, width}, "seqnorm_fwd beta");
  Tensor out(y.shape());
  Tensor normalized(y.shape());
  std::vector<double> inv_std(batch * positions);
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t p = 0; p < positions; ++p) {
            const std::size_t row = b * positions + p;
            const double* v = y.data() + row * width;
            double mean = 0.0;
            for (std::size_t c = 0; c < width; ++c) mean += v[c];
            mean /= static_cast<double>(width);
            double var = 0.0;
            for (std::size_t c = 0; c < width; ++c) var += (v[c] - mean) * (v[c] - mean);
            var /= static_cast<double>(width);
            const double inv = 1.0 / std::sqrt(var + eps);
            inv_std[row] = inv;
            double* nv = normalized.data() + row * width;
            double* ov = out.data() + row * width;
            const double* gp = gamma.data() + p * width;
            const double* bp = beta.data() + p * width;
            for (std::size_t c = 0; c < width; ++c) {
              nv[c] = (v[c] - mean) * inv;
              ov[c] = nv[c] * gp[c] + bp[c];
            }
          }
      },
      kSampleGrain);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

inline Tensor seqnorm_bwd(const Tensor& dout, const Tensor& gamma, const SeqNormCache& cache, std::span<double> dgamma,
                          std::span<double> dbeta) {
  const Tensor& nrm = cache.normalized;
  dout.expect_shape(nrm.shape(), "seqnorm_bwd output gradient");
  const std::size_t batch = nrm.dim(0), positions = nrm.dim(1), width = nrm.dim(2);
  detail::expect_grad_size(dgamma, gamma.size(), "seqnorm_bwd gamma");
  detail::expect_grad_size(dbeta, gamma.size(), "seqnorm_bwd beta");
  detail::accumulate_blocks(batch, {dgamma, dbeta},
                            [&](std::size_t lo, std::size_t hi, std::span<const std::span<double>> g) {
                              for (std::size_t b = lo; b < hi; ++b)
                                for (std::size_t p = 0; p < positions; ++p) {
                                  const std::size_t row = b * positions + p;
                                  const double* go = dout.data() + row * width;
                                  const double* nv = nrm.data() + row * width;
                                  for (std::size_t c = 0; c < width; ++c) {
                                    g[0][p * width + c] += go[c] * nv[c];
                                    g[1][p * width + c] += go[c];
                                  }
                                }
                            });
  Tensor dy(nrm.shape());
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> dn(width);
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t p = 0; p < positions; ++p) {
            const std::size_t row = b * positions + p;
            const double* go = dout.data() + row * width;
            const double* nv = nrm.data() + row * width;
            const double* gp = gamma.data() + p * width;
            double mean_dn = 0.0, mean_dn_n = 0.0;
            for (std::size_t c = 0; c < width; ++c) {
              dn[c] = go[c] * gp[c];
              mean_dn += dn[c];
              mean_dn_n += dn[c] * nv[c];
            }
            mean_dn /= static_cast<double>(width);
            mean_dn_n /= static_cast<double>(width);
            double* dv = dy.data() + row * width;
            for (std::size_t c = 0; c < width; ++c)
              dv[c] = cache.inv_std[row] * (dn[c] - mean_dn - nv[c] * mean_dn_n);
          }
      },
      kSampleGrain);
  return dy;
}

// ---------------------------------------------------------------------------

inline Tensor relu_fwd(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] > 0.0 ? x[k] : 0.0;
  return y;
}

/// Subgradient 0 at x == 0.
inline Tensor relu_bwd(const Tensor& x, const Tensor& dy) {
  dy.expect_shape(x.shape(), "relu_bwd output gradient");
  Tensor dx(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) dx[k] = x[k] > 0.0 ? dy[k] : 0.0;
  return dx;
}

// ---------------------------------------------------------------------------
// 1-D cross-correlation along the position axis with zero "same" padding:
//   y[b, p, o] = bias[o] + sum_{c, t} K[o, c, t] * x[b, p + t - (k-1)/2, c]

inline void check_conv_shapes(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  detail::expect_rank(x, 3, "conv1d input");
  detail::expect_rank(kernels, 3, "conv1d kernels");
  if (kernels.dim(2) % 2 == 0) throw ShapeError("conv1d kernel size must be odd, got " + std::to_string(kernels.dim(2)));
  if (kernels.dim(1) != x.dim(2))
    throw ShapeError("conv1d: kernel input channels " + std::to_string(kernels.dim(1)) + " != input channels " +
                     std::to_string(x.dim(2)));
  bias.expect_shape({kernels.dim(0)}, "conv1d bias");
}

inline Tensor conv1d_fwd(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  check_conv_shapes(x, kernels, bias);
  const std::size_t batch = x.dim(0), positions = x.dim(1), cin = x.dim(2);
  const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor y({batch, positions, cout});
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t p = 0; p < positions; ++p) {
            double* yv = y.data() + (b * positions + p) * cout;
            for (std::size_t o = 0; o < cout; ++o) {
              double acc = bias[o];
              for (std::size_t t = 0; t < k; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(t) - pad;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(positions)) continue;
                const double* xv = x.data() + (b * positions + static_cast<std::size_t>(src)) * cin;
                for (std::size_t c = 0; c < cin; ++c) acc += kernels[(o * cin + c) * k + t] * xv[c];
              }
              yv[o] = acc;
            }
          }
      },
      kSampleGrain);
  return y;
}

inline void conv1d_bwd(const Tensor& x, const Tensor& kernels, const Tensor& dy, Tensor* dx, std::span<double> dk,
                       std::span<double> dbias) {
  const std::size_t batch = x.dim(0), positions = x.dim(1), cin = x.dim(2);
  const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  dy.expect_shape({batch, positions, cout}, "conv1d_bwd output gradient");
  detail::expect_grad_size(dk, kernels.size(), "conv1d_bwd kernels");
  detail::expect_grad_size(dbias, cout, "conv1d_bwd bias");
  detail::accumulate_blocks(batch, {dk, dbias}, [&](std::size_t lo, std::size_t hi, std::span<const std::span<double>> g) {
    for (std::size_t b = lo; b < hi; ++b)
      for (std::size_t p = 0; p < positions; ++p) {
        const double* gv = dy.data() + (b * positions + p) * cout;
        for (std::size_t o = 0; o < cout; ++o) {
          g[1][o] += gv[o];
          for (std::size_t t = 0; t < k; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(t) - pad;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(positions)) continue;
            const double* xv = x.data() + (b * positions + static_cast<std::size_t>(src)) * cin;
            for (std::size_t c = 0; c < cin; ++c) g[0][(o * cin + c) * k + t] += gv[o] * xv[c];
          }
        }
      }
  });
  if (dx == nullptr) return;
  *dx = Tensor(x.shape());
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b)
          for (std::size_t p = 0; p < positions; ++p) {
            const double* gv = dy.data() + (b * positions + p) * cout;
            for (std::size_t t = 0; t < k; ++t) {
              const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(t) - pad;
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(positions)) continue;
              double* dxv = dx->data() + (b * positions + static_cast<std::size_t>(src)) * cin;
              for (std::size_t o = 0; o < cout; ++o)
                for (std::size_t c = 0; c < cin; ++c) dxv[c] += kernels[(o * cin + c) * k + t] * gv[o];
            }
          }
      },
      kSampleGrain);
}

// ---------------------------------------------------------------------------

inline Tensor mean_pool_fwd(const Tensor& x) {
  detail::expect_rank(x, 3, "mean_pool input");
  const std::size_t batch = x.dim(0), positions = x.dim(1), width = x.dim(2);
  Tensor y({batch, width});
  const double scale = 1.0 / static_cast<double>(positions);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t p = 0; p < positions; ++p)
      for (std::size_t c = 0; c < width; ++c) y[b * width + c] += x[(b * positions + p) * width + c];
  for (double& v : y.values()) v *= scale;
  return y;
}

inline Tensor mean_pool_bwd(const Tensor& dy, std::size_t positions) {
  detail::expect_rank(dy, 2, "mean_pool_bwd output gradient");
  const std::size_t batch = dy.dim(0), width = dy.dim(1);
  Tensor dx({batch, positions, width});
  const double scale = 1.0 / static_cast<double>(positions);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t p = 0; p < positions; ++p)
      for (std::size_t c = 0; c < width; ++c) dx[(b * positions + p) * width + c] = dy[b * width + c] * scale;
  return dx;
}

// ---------------------------------------------------------------------------
// Sinusoidal position codes, 0-based channel index m: even m = 2n holds
// sin(l / 10000^(2n/D)), odd m = 2n+1 holds cos of the same angle.

inline Tensor positional_encoding(unsigned hops, std::size_t width) {
  if (width == 0) throw ShapeError("positional_encoding: width must be at least 1");
  const std::size_t positions = std::size_t{hops} + 1;
  Tensor pe({positions, width});
  for (std::size_t l = 0; l < positions; ++l)
    for (std::size_t m = 0; m < width; ++m) {
      const double n = static_cast<double>(m / 2);
      const double angle = static_cast<double>(l) / std::pow(10000.0, 2.0 * n / static_cast<double>(width));
      pe[l * width + m] = (m % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

/// x[b, l, :] += pe[l, :] for every sample.
inline void add_positional(Tensor& x, const Tensor& pe) {
  detail::expect_rank(x, 3, "add_positional input");
  pe.expect_shape({x.dim(1), x.dim(2)}, "add_positional encoding");
  const std::size_t stride = pe.size();
  for (std::size_t b = 0; b < x.dim(0); ++b)
    for (std::size_t k = 0; k < stride; ++k) x[b * stride + k] += pe[k];
}

// ---------------------------------------------------------------------------
// Learnable-query attention over positions:
//   alpha[b, l] = softmax_l(<k[b, l], q>),  r[b] = sum_l alpha[b, l] k[b, l]

inline Tensor query_attention_fwd(const Tensor& keys, const Tensor& query, Tensor* alpha_out) {
  detail::expect_rank(keys, 3, "query_attention keys");
  const std::size_t batch = keys.dim(0), positions = keys.dim(1), width = keys.dim(2);
  query.expect_shape({width}, "query_attention query");
  Tensor r({batch, width});
  Tensor alpha({batch, positions});
  parallel_for(
      batch, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b) {
          double* a = alpha.data() + b * positions;
          double top = -std::numeric_limits<double>::infinity();
          for (std::size_t p = 0; p < positions; ++p) {
            const double* kv = keys.data() + (b * positions + p) * width;
            double s = 0.0;
            for (std::size_t c = 0; c < width; ++c) s += kv[c] * query[c];
            a[p] = s;
            top = std::max(top, s);
          }
          double total = 0.0;
          for (std::size_t p = 0; p < positions; ++p) {
            a[p] = std::exp(a[p] - top);
            total += a[p];
          }
          for (std::size_t p = 0; p < positions; ++p) a[p] /= total;
          double* rv = r.data() + b * width;
          for (std::size_t p = 0; p < positions; ++p) {
            const double* kv = keys.data() + (b * positions + p) * width;
            for (std::size_t c = 0; c < width; ++c) rv[c] += a[p] * kv[c];
          }
        }
      },
      kSampleGrain);
  if (alpha_out != nullptr) *alpha_out = std::move(alpha);
  return r;
}

inline Tensor query_attention_bwd(const Tensor& keys, const Tensor& query, const Tensor& alpha, const Tensor& r,
                                  const Tensor& dr, std::span<double> dquery) {
  const std::size_t batch = keys.dim(0), positions = keys.dim(1), width = keys.dim(2);
  dr.expect_shape({batch, width}, "query_attention_bwd output gradient");
  detail::expect_grad_size(dquery, width, "query_attention_bwd query");
  // dscore[b, l] = alpha_l * (<dr, k_l> - <dr, r>)
  std::vector<double> dscore(batch * positions);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = dr.data() + b * width;
    const double* rv = r.data() + b * width;
    double g_r = 0.0;
    for (std::size_t c = 0; c < width; ++c) g_r += g[c] * rv[c];
    for (std::size_t p = 0; p < positions; ++p) {
      const double* kv = keys.data() + (b * positions + p) * width;
      double g_k = 0.0;
      for (std::size_t c = 0; c < width; ++c) g_k += g[c] * kv[c];
      dscore[b * positions + p] = alpha[b * positions + p] * (g_k - g_r);
    }
  }
  detail::accumulate_blocks(batch, {dquery}, [&](std::size_t lo, std::size_t hi, std::span<const std::span<double>> g) {
    for (std::size_t b = lo; b < hi; ++b)
      for (std::size_t p = 0; p < positions; ++p) {
        const double* kv = keys.data() + (b * positions + p) * width;
        for (std::size_t c = 0; c < width; ++c) g[0][c] += dscore[b * positions + p] * kv[c];
      }
  });
  Tensor dkeys(keys.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t p = 0; p < positions; ++p) {
      const double a = alpha[b * positions + p];
      const double ds = dscore[b * positions + p];
      double* dk = dkeys.data() + (b * positions + p) * width;
      for (std::size_t c = 0; c < width; ++c) dk[c] = a * dr[b * width + c] + ds * query[c];
    }
  return dkeys;
}

// ---------------------------------------------------------------------------
// Affine classifier: logits[b] = W r[b] + bias, W of shape [classes][width].

inline Tensor affine_fwd(const Tensor& x, const Tensor& w, const Tensor& bias) {
  detail::expect_rank(x, 2, "affine input");
  const std::size_t batch = x.dim(0), width = x.dim(1), classes = w.dim(0);
  w.expect_shape({classes, width}, "affine weight");
  bias.expect_shape({classes}, "affine bias");
  Tensor y({batch, classes});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < classes; ++o) {
      double acc = bias[o];
      for (std::size_t c = 0; c < width; ++c) acc += w[o * width + c] * x[b * width + c];
      y[b * classes + o] = acc;
    }
  return y;
}

inline void affine_bwd(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, std::span<double> dw,
                       std::span<double> dbias) {
  const std::size_t batch = x.dim(0), width = x.dim(1), classes = w.dim(0);
  dy.expect_shape({batch, classes}, "affine_bwd output gradient");
  detail::expect_grad_size(dw, w.size(), "affine_bwd weight");
  detail::expect_grad_size(dbias, classes, "affine_bwd bias");
  detail::accumulate_blocks(batch, {dw, dbias}, [&](std::size_t lo, std::size_t hi, std::span<const std::span<double>> g) {
    for (std::size_t b = lo; b < hi; ++b)
      for (std::size_t o = 0; o < classes; ++o) {
        const double gv = dy[b * classes + o];
        g[1][o] += gv;
        for (std::size_t c = 0; c < width; ++c) g[0][o * width + c] += gv * x[b * width + c];
      }
  });
  if (dx == nullptr) return;
  *dx = Tensor(x.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < classes; ++o)
      for (std::size_t c = 0; c < width; ++c) (*dx)[b * width + c] += w[o * width + c] * dy[b * classes + o];
}

// ---------------------------------------------------------------------------
// Losses. Both return the batch-mean loss and its gradient w.r.t. logits.

struct LossResult {
  double loss = 0.0;
  Tensor dlogits;
};

/// Mean over the batch of -log softmax(logits)[target], log-sum-exp stabilized.
inline LossResult softmax_xent(const Tensor& logits, std::span<const std::uint32_t> targets) {
  detail::expect_rank(logits, 2, "softmax_xent logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (targets.size() != batch) throw ShapeError("softmax_xent: one target per sample required");
  LossResult res{0.0, Tensor(logits.shape())};
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b] >= classes) throw InvalidArgument("softmax_xent: target class out of range");
    const double* z = logits.data() + b * classes;
    const double top = *std::max_element(z, z + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(z[c] - top);
    const double lse = top + std::log(total);
    res.loss += (lse - z[targets[b]]) * inv_batch;
    double* g = res.dlogits.data() + b * classes;
    for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(z[c] - lse) * inv_batch;
    g[targets[b]] -= inv_batch;
  }
  return res;
}

/// Sigmoid binary cross-entropy averaged over all batch x class entries.
/// `targets` is the row-major batch x classes 0/1 matrix.
inline LossResult bce_with_logits(const Tensor& logits, std::span<const std::uint8_t> targets) {
  detail::expect_rank(logits, 2, "bce logits");
  if (targets.size() != logits.size()) throw ShapeError("bce: target matrix must match logits");
  LossResult res{0.0, Tensor(logits.shape())};
  const double inv = 1.0 / static_cast<double>(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double z = logits[k];
    const double t = targets[k];
    res.loss += (std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)))) * inv;
    const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    res.dlogits[k] = (sig - t) * inv;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Inverted dropout: kept units are scaled by 1 / (1 - rate).

struct DropoutMask {
  std::vector<double> scale;  // empty means identity
};

inline Tensor dropout_fwd(const Tensor& x, double rate, Rng& rng, bool training, DropoutMask* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  if (mask != nullptr) mask->scale.clear();
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> scale(x.size());
  for (double& s : scale) s = uniform01(rng) >= rate ? keep_scale : 0.0;
  Tensor y(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] * scale[k];
  if (mask != nullptr) mask->scale = std::move(scale);
  return y;
}

inline Tensor dropout_bwd(const Tensor& dy, const DropoutMask& mask) {
  if (mask.scale.empty()) return dy;
  if (mask.scale.size() != dy.size()) throw ShapeError("dropout_bwd: mask does not match gradient");
  Tensor dx(dy.shape());
  for (std::size_t k = 0; k < dy.size(); ++k) dx[k] = dy[k] * mask.scale[k];
  return dx;
}

}  // namespace n2s::ops
