#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "genrank/numeric/graph.hpp"

// Differentiable free functions over Var. Every op validates shapes (ConfigError)
// and the graph rejects non-finite outputs (NumericError).

namespace genrank {

// Additive value for disallowed attention positions.
inline constexpr double kMaskedLogit = -1e9;

namespace detail {

inline void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ConfigError(std::string(op) + ": " + what);
}

template <typename S>
void require_same_shape(const char* op, const Var<S>& a, const Var<S>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op,
          "shape mismatch " + shape_string(a.value()) + " vs " + shape_string(b.value()));
}

}  // namespace detail

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  detail::require(a.cols() == b.rows(), "matmul",
                  "inner dims " + shape_string(a.value()) + " * " + shape_string(b.value()));
  Tensor<S> out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return a.graph().record("matmul", std::move(out), {a, b}, [ia, ib](Graph<S>& g, const Tensor<S>& go) {
    if (g.needs_grad(ia)) g.grad_ref(ia).noalias() += go * g.value(ib).transpose();
    if (g.needs_grad(ib)) g.grad_ref(ib).noalias() += g.value(ia).transpose() * go;
  });
}

// a * b^T
template <typename S>
Var<S> matmul_nt(const Var<S>& a, const Var<S>& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt",
                  "inner dims " + shape_string(a.value()) + " * T" + shape_string(b.value()));
  Tensor<S> out = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id();
  return a.graph().record("matmul_nt", std::move(out), {a, b},
                          [ia, ib](Graph<S>& g, const Tensor<S>& go) {
                            if (g.needs_grad(ia)) g.grad_ref(ia).noalias() += go * g.value(ib);
                            if (g.needs_grad(ib)) g.grad_ref(ib).noalias() += go.transpose() * g.value(ia);
                          });
}

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  detail::require_same_shape("add", a, b);
  Tensor<S> out = a.value() + b.value();
  const int ia = a.id(), ib = b.id();
  return a.graph().record("add", std::move(out), {a, b}, [ia, ib](Graph<S>& g, const Tensor<S>& go) {
    if (g.needs_grad(ia)) g.grad_ref(ia) += go;
    if (g.needs_grad(ib)) g.grad_ref(ib) += go;
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  detail::require_same_shape("sub", a, b);
  Tensor<S> out = a.value() - b.value();
  const int ia = a.id(), ib = b.id();
  return a.graph().record("sub", std::move(out), {a, b}, [ia, ib](Graph<S>& g, const Tensor<S>& go) {
    if (g.needs_grad(ia)) g.grad_ref(ia) += go;
    if (g.needs_grad(ib)) g.grad_ref(ib) -= go;
  });
}

template <typename S>
Var<S> operator+(const Var<S>& a, const Var<S>& b) { return add(a, b); }

template <typename S>
Var<S> operator-(const Var<S>& a, const Var<S>& b) { return sub(a, b); }

// Elementwise product.
template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  detail::require_same_shape("mul", a, b);
  Tensor<S> out = a.value().cwiseProduct(b.value());
  const int ia = a.id(), ib = b.id();
  return a.graph().record("mul", std::move(out), {a, b}, [ia, ib](Graph<S>& g, const Tensor<S>& go) {
    if (g.needs_grad(ia)) g.grad_ref(ia) += go.cwiseProduct(g.value(ib));
    if (g.needs_grad(ib)) g.grad_ref(ib) += go.cwiseProduct(g.value(ia));
  });
}

// factor * a + offset
template <typename S>
Var<S> affine(const Var<S>& a, S factor, S offset = S(0)) {
  Tensor<S> out = (a.value().array() * factor + offset).matrix();
  const int ia = a.id();
  return a.graph().record("affine", std::move(out), {a}, [ia, factor](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia) += go * factor;
  });
}

template <typename S>
Var<S> scale(const Var<S>& a, S factor) { return affine(a, factor); }

// a[m,n] + row[1,n] broadcast over rows.
template <typename S>
Var<S> add_row(const Var<S>& a, const Var<S>& row) {
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
                  "row " + shape_string(row.value()) + " vs " + shape_string(a.value()));
  Tensor<S> out = a.value().rowwise() + row.value().row(0);
  const int ia = a.id(), ir = row.id();
  return a.graph().record("add_row", std::move(out), {a, row}, [ia, ir](Graph<S>& g, const Tensor<S>& go) {
    if (g.needs_grad(ia)) g.grad_ref(ia) += go;
    if (g.needs_grad(ir)) g.grad_ref(ir) += go.colwise().sum();
  });
}

template <typename S>
Var<S> relu(const Var<S>& a) {
  Tensor<S> out = a.value().cwiseMax(S(0));
  const int ia = a.id();
  return a.graph().record("relu", std::move(out), {a}, [ia](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia).array() += (g.value(ia).array() > S(0)).template cast<S>() * go.array();
  });
}

// tanh approximation, as in GPT-2.
template <typename S>
Var<S> gelu(const Var<S>& a) {
  const S kC = S(0.7978845608028654);  // sqrt(2/pi)
  const S kK = S(0.044715);
  const auto& x = a.value().array();
  Tensor<S> t = ((x + kK * x.cube()) * kC).tanh().matrix();
  Tensor<S> out = (S(0.5) * x * (S(1) + t.array())).matrix();
  const int ia = a.id();
  return a.graph().record("gelu", std::move(out), {a}, [ia, kC, kK, t = std::move(t)](Graph<S>& g, const Tensor<S>& go) {
    const auto& xv = g.value(ia).array();
    auto dt = (S(1) - t.array().square()) * kC * (S(1) + S(3) * kK * xv.square());
    auto d = S(0.5) * (S(1) + t.array()) + S(0.5) * xv * dt;
    g.grad_ref(ia).array() += go.array() * d;
  });
}

template <typename S>
Var<S> exp(const Var<S>& a) {
  Tensor<S> out = a.value().array().exp().matrix();
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record("exp", std::move(out), {a}, [ia, self](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia).array() += go.array() * g.value(self).array();
  });
}

template <typename S>
Var<S> log(const Var<S>& a) {
  detail::require(a.value().minCoeff() > S(0), "log", "argument must be positive");
  Tensor<S> out = a.value().array().log().matrix();
  const int ia = a.id();
  return a.graph().record("log", std::move(out), {a}, [ia](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia).array() += go.array() / g.value(ia).array();
  });
}

// Gradient passes only where lo < a < hi.
template <typename S>
Var<S> clamp(const Var<S>& a, S lo, S hi) {
  Tensor<S> out = a.value().cwiseMax(lo).cwiseMin(hi);
  const int ia = a.id();
  return a.graph().record("clamp", std::move(out), {a}, [ia, lo, hi](Graph<S>& g, const Tensor<S>& go) {
    const auto& x = g.value(ia).array();
    g.grad_ref(ia).array() += go.array() * ((x > lo) && (x < hi)).template cast<S>();
  });
}

template <typename S>
Var<S> softmax_rows(const Var<S>& a) {
  Tensor<S> out = (a.value().colwise() - a.value().rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record("softmax_rows", std::move(out), {a}, [ia, self](Graph<S>& g, const Tensor<S>& go) {
    const auto& y = g.value(self);
    Eigen::Matrix<S, Eigen::Dynamic, 1> dot = go.cwiseProduct(y).rowwise().sum();
    g.grad_ref(ia).array() += y.array() * (go.colwise() - dot).array();
  });
}

template <typename S>
Var<S> log_softmax_rows(const Var<S>& a) {
  Tensor<S> shifted = a.value().colwise() - a.value().rowwise().maxCoeff();
  Eigen::Matrix<S, Eigen::Dynamic, 1> lse = shifted.array().exp().rowwise().sum().log().matrix();
  Tensor<S> out = shifted.colwise() - lse;
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  return a.graph().record("log_softmax_rows", std::move(out), {a}, [ia, self](Graph<S>& g, const Tensor<S>& go) {
    Tensor<S> probs = g.value(self).array().exp().matrix();
    Eigen::Matrix<S, Eigen::Dynamic, 1> total = go.rowwise().sum();
    g.grad_ref(ia) += go - (probs.array().colwise() * total.array()).matrix();
  });
}

// Adds kMaskedLogit above the diagonal: row i may only see columns <= i.
template <typename S>
Var<S> causal_mask(const Var<S>& a) {
  detail::require(a.rows() == a.cols(), "causal_mask", "expects square scores " + shape_string(a.value()));
  Tensor<S> out = a.value();
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = i + 1; j < out.cols(); ++j) out(i, j) += static_cast<S>(kMaskedLogit);
  }
  const int ia = a.id();
  return a.graph().record("causal_mask", std::move(out), {a}, [ia](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia) += go;
  });
}

// Row-wise normalisation with learned gain/bias rows.
template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gain, const Var<S>& bias, S eps = S(1e-5)) {
  const Index n = x.cols();
  detail::require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n,
                  "layer_norm", "gain/bias must be [1x" + std::to_string(n) + "]");
  const auto& xv = x.value();
  Eigen::Matrix<S, Eigen::Dynamic, 1> mean = xv.rowwise().mean();
  Tensor<S> centered = xv.colwise() - mean;
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std =
      ((centered.array().square().rowwise().sum() / S(n)) + eps).rsqrt().matrix();
  Tensor<S> xhat = (centered.array().colwise() * inv_std.array()).matrix();
  Tensor<S> out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.graph().record(
      "layer_norm", std::move(out), {x, gain, bias},
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph<S>& g, const Tensor<S>& go) {
        if (g.needs_grad(ig)) g.grad_ref(ig) += go.cwiseProduct(xhat).colwise().sum();
        if (g.needs_grad(ib)) g.grad_ref(ib) += go.colwise().sum();
        if (g.needs_grad(ix)) {
          Tensor<S> dxhat = (go.array().rowwise() * g.value(ig).row(0).array()).matrix();
          const S cols = S(xhat.cols());
          Eigen::Matrix<S, Eigen::Dynamic, 1> m1 = dxhat.rowwise().sum() / cols;
          Eigen::Matrix<S, Eigen::Dynamic, 1> m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / cols;
          Tensor<S> dx = dxhat.colwise() - m1;
          dx -= (xhat.array().colwise() * m2.array()).matrix();
          dx.array().colwise() *= inv_std.array();
          g.grad_ref(ix) += dx;
        }
      });
}

// Gathers rows of `table` ([V,d]) for each id -> [n,d].
template <typename S>
Var<S> embedding(const Var<S>& table, std::span<const TokenId> ids) {
  const Index vocab = table.rows();
  Tensor<S> out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) {
      throw InputError("embedding: token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    out.row(static_cast<Index>(i)) = table.value().row(ids[i]);
  }
  const int it = table.id();
  std::vector<TokenId> kept(ids.begin(), ids.end());
  return table.graph().record("embedding", std::move(out), {table},
                              [it, kept = std::move(kept)](Graph<S>& g, const Tensor<S>& go) {
                                auto& gt = g.grad_ref(it);
                                for (std::size_t i = 0; i < kept.size(); ++i) {
                                  gt.row(kept[i]) += go.row(static_cast<Index>(i));
                                }
                              });
}

template <typename S>
Var<S> slice_rows(const Var<S>& a, Index start, Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows",
                  "range [" + std::to_string(start) + "," + std::to_string(start + count) +
                      ") outside " + shape_string(a.value()));
  Tensor<S> out = a.value().middleRows(start, count);
  const int ia = a.id();
  return a.graph().record("slice_rows", std::move(out), {a}, [ia, start, count](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia).middleRows(start, count) += go;
  });
}

template <typename S>
Var<S> slice_cols(const Var<S>& a, Index start, Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols",
                  "range [" + std::to_string(start) + "," + std::to_string(start + count) +
                      ") outside " + shape_string(a.value()));
  Tensor<S> out = a.value().middleCols(start, count);
  const int ia = a.id();
  return a.graph().record("slice_cols", std::move(out), {a}, [ia, start, count](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia).middleCols(start, count) += go;
  });
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == rows, "concat_cols", "row mismatch " + shape_string(p.value()));
    cols += p.cols();
  }
  Tensor<S> out(rows, cols);
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(at);
    at += p.cols();
  }
  return parts.front().graph().record(
      "concat_cols", std::move(out), parts,
      [ids = std::move(ids), offsets = std::move(offsets)](Graph<S>& g, const Tensor<S>& go) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!g.needs_grad(ids[k])) continue;
          auto& gk = g.grad_ref(ids[k]);
          gk += go.middleCols(offsets[k], gk.cols());
        }
      });
}

// out(i,0) = a(i, cols[i])
template <typename S>
Var<S> pick_per_row(const Var<S>& a, std::span<const TokenId> cols) {
  detail::require(static_cast<Index>(cols.size()) == a.rows(), "pick_per_row",
                  std::to_string(cols.size()) + " indices for " + shape_string(a.value()));
  Tensor<S> out(a.rows(), 1);
  for (Index i = 0; i < a.rows(); ++i) {
    const auto c = cols[static_cast<std::size_t>(i)];
    if (c < 0 || c >= a.cols()) throw InputError("pick_per_row: column " + std::to_string(c) + " out of range");
    out(i, 0) = a.value()(i, c);
  }
  const int ia = a.id();
  std::vector<TokenId> kept(cols.begin(), cols.end());
  return a.graph().record("pick_per_row", std::move(out), {a},
                          [ia, kept = std::move(kept)](Graph<S>& g, const Tensor<S>& go) {
                            auto& ga = g.grad_ref(ia);
                            for (std::size_t i = 0; i < kept.size(); ++i) {
                              ga(static_cast<Index>(i), kept[i]) += go(static_cast<Index>(i), 0);
                            }
                          });
}

template <typename S>
Var<S> sum(const Var<S>& a) {
  Tensor<S> out = scalar_tensor<S>(a.value().sum());
  const int ia = a.id();
  return a.graph().record("sum", std::move(out), {a}, [ia](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia).array() += go(0, 0);
  });
}

// Scales kept entries by 1/(1-rate); `keep` holds 0/1 per entry.
template <typename S>
Var<S> dropout(const Var<S>& a, const Tensor<S>& keep, S rate) {
  detail::require(keep.rows() == a.rows() && keep.cols() == a.cols(), "dropout", "mask shape mismatch");
  const S factor = S(1) / (S(1) - rate);
  Tensor<S> mask = keep * factor;
  Tensor<S> out = a.value().cwiseProduct(mask);
  const int ia = a.id();
  return a.graph().record("dropout", std::move(out), {a}, [ia, mask = std::move(mask)](Graph<S>& g, const Tensor<S>& go) {
    g.grad_ref(ia) += go.cwiseProduct(mask);
  });
}

}  // namespace genrank
