// Copyright 2026 The viplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vip/core/ops.hpp"

#include <cmath>
#include <numbers>

#include "vip/core/error.hpp"

namespace vip::core::ops {
namespace {

Tape& tape_of(Var a) {
  require(a.valid(), ErrorCode::kRuntime, "op applied to an empty Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b, std::string_view op) {
  Tape& t = tape_of(a);
  require(b.valid() && b.tape() == &t, ErrorCode::kRuntime,
          std::string(op) + ": operands live on different tapes");
  return t;
}

[[noreturn]] void shape_error(std::string_view op, const Matrix& a, const Matrix& b) {
  fail(ErrorCode::kRuntime,
       std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void same_shape(std::string_view op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b, "add");
  same_shape("add", a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, int self) {
                  tp.accumulate(ia, tp.grad(self));
                  tp.accumulate(ib, tp.grad(self));
                },
                "add");
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b, "sub");
  same_shape("sub", a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, int self) {
                  tp.accumulate(ia, tp.grad(self));
                  if (tp.requires_grad(ib)) tp.accumulate_expr(ib, -tp.grad(self));
                },
                "sub");
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b, "mul");
  same_shape("mul", a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ia)) tp.accumulate_expr(ia, g.cwiseProduct(tp.value(ib)));
                  if (tp.requires_grad(ib)) tp.accumulate_expr(ib, g.cwiseProduct(tp.value(ia)));
                },
                "mul");
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value() * s, a.requires_grad(),
                [ia, s](Tape& tp, int self) { tp.accumulate_expr(ia, tp.grad(self) * s); },
                "scale");
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row, "add_row");
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_row", av, rv);
  Matrix out = av;
  out.rowwise() += rv.row(0);
  const int ia = a.id(), ir = row.id();
  return t.push(std::move(out), a.requires_grad() || row.requires_grad(),
                [ia, ir](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  tp.accumulate(ia, g);
                  if (tp.requires_grad(ir)) tp.accumulate_expr(ir, g.colwise().sum());
                },
                "add_row");
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b, "matmul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const int ia = a.id(), ib = b.id();
  Matrix out = av * bv;
  return t.push(std::move(out), a.requires_grad() || b.requires_grad(),
                [ia, ib](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ia)) tp.accumulate_expr(ia, g * tp.value(ib).transpose());
                  if (tp.requires_grad(ib)) tp.accumulate_expr(ib, tp.value(ia).transpose() * g);
                },
                "matmul");
}

Var linear(Var x, Var w, Var b) {
  Tape& t = tape_of(x, w, "linear");
  require(b.tape() == &t, ErrorCode::kRuntime, "linear: operands live on different tapes");
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  if (xv.cols() != wv.rows()) shape_error("linear", xv, wv);
  if (bv.rows() != 1 || bv.cols() != wv.cols()) shape_error("linear(bias)", wv, bv);
  Matrix out = xv * wv;
  out.rowwise() += bv.row(0);
  const int ix = x.id(), iw = w.id(), ib = b.id();
  return t.push(std::move(out), x.requires_grad() || w.requires_grad() || b.requires_grad(),
                [ix, iw, ib](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ix)) tp.accumulate_expr(ix, g * tp.value(iw).transpose());
                  if (tp.requires_grad(iw)) tp.accumulate_expr(iw, tp.value(ix).transpose() * g);
                  if (tp.requires_grad(ib)) tp.accumulate_expr(ib, g.colwise().sum());
                },
                "linear");
}

Var gelu(Var a) {
  Tape& t = tape_of(a);
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    out.data()[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
  }
  const int ia = a.id();
  return t.push(std::move(out), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& x = tp.value(ia);
                  const Matrix& g = tp.grad(self);
                  Matrix d(x.rows(), x.cols());
                  for (Eigen::Index i = 0; i < x.size(); ++i) {
                    const double v = x.data()[i];
                    const double th = std::tanh(kC * (v + kA * v * v * v));
                    const double dv = 0.5 * (1.0 + th) +
                                      0.5 * v * (1.0 - th * th) * kC * (1.0 + 3.0 * kA * v * v);
                    d.data()[i] = g.data()[i] * dv;
                  }
                  tp.accumulate(ia, d);
                },
                "gelu");
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value().cwiseMax(0.0), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& x = tp.value(ia);
                  tp.accumulate_expr(ia, (x.array() > 0.0).cast<double>().matrix().cwiseProduct(tp.grad(self)));
                },
                "relu");
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value().array().tanh().matrix(), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& y = tp.value(self);
                  tp.accumulate_expr(
                      ia, ((1.0 - y.array().square()) * tp.grad(self).array()).matrix());
                },
                "tanh");
}

Var exp(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value().array().exp().matrix(), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  tp.accumulate_expr(ia, tp.value(self).cwiseProduct(tp.grad(self)));
                },
                "exp");
}

Var log(Var a) {
  Tape& t = tape_of(a);
  require((a.value().array() > 0.0).all(), ErrorCode::kRuntime, "log: non-positive input");
  const int ia = a.id();
  return t.push(a.value().array().log().matrix(), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  tp.accumulate_expr(ia, tp.grad(self).cwiseQuotient(tp.value(ia)));
                },
                "log");
}

namespace {

void softmax_inplace(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp().matrix();
    row /= row.sum();
  }
}

// dX = Y * (G - rowsum(G * Y))
Matrix softmax_backward(const Matrix& y, const Matrix& g) {
  Matrix d = g;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double dot = y.row(r).dot(g.row(r));
    d.row(r) = y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
  }
  return d;
}

}  // namespace

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  softmax_inplace(out);
  const int ia = a.id();
  return t.push(std::move(out), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  tp.accumulate(ia, softmax_backward(tp.value(self), tp.grad(self)));
                },
                "softmax");
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& t = tape_of(x, gamma, "layer_norm");
  const Matrix& xv = x.value();
  const Matrix& gv = gamma.value();
  const Matrix& bv = beta.value();
  const Eigen::Index n = xv.cols();
  if (gv.rows() != 1 || gv.cols() != n) shape_error("layer_norm(gamma)", xv, gv);
  if (bv.rows() != 1 || bv.cols() != n) shape_error("layer_norm(beta)", xv, bv);
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = xhat.array().rowwise() * gv.row(0).array();
  out.rowwise() += bv.row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return t.push(
      std::move(out), x.requires_grad() || gamma.requires_grad() || beta.requires_grad(),
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        const Matrix& gv = tp.value(ig);
        if (tp.requires_grad(ig)) tp.accumulate_expr(ig, g.cwiseProduct(xhat).colwise().sum());
        if (tp.requires_grad(ib)) tp.accumulate_expr(ib, g.colwise().sum());
        if (tp.requires_grad(ix)) {
          const double n = static_cast<double>(g.cols());
          Matrix dxhat = g.array().rowwise() * gv.row(0).array();
          Matrix dx(g.rows(), g.cols());
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double s1 = dxhat.row(r).sum();
            const double s2 = dxhat.row(r).dot(xhat.row(r));
            dx.row(r) = (inv_std(r) / n) *
                        (n * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2).matrix();
          }
          tp.accumulate(ix, dx);
        }
      },
      "layer_norm");
}

Var attention(Var q, Var k, Var v, int heads, bool causal) {
  Tape& t = tape_of(q, k, "attention");
  require(v.tape() == &t, ErrorCode::kRuntime, "attention: operands live on different tapes");
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  const Eigen::Index d = qv.cols();
  if (kv.cols() != d || vv.cols() != d) shape_error("attention", qv, kv);
  if (kv.rows() != vv.rows()) shape_error("attention(kv)", kv, vv);
  require(heads > 0 && d % heads == 0, ErrorCode::kRuntime,
          "attention: width " + std::to_string(d) + " not divisible by " +
              std::to_string(heads) + " heads");
  if (causal) require(qv.rows() <= kv.rows(), ErrorCode::kRuntime, "attention: causal needs L <= S");
  const Eigen::Index L = qv.rows(), S = kv.rows(), dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(L, d);
  for (int h = 0; h < heads; ++h) {
    const auto qh = qv.middleCols(h * dh, dh);
    const auto kh = kv.middleCols(h * dh, dh);
    Matrix s = (qh * kh.transpose()) * inv_sqrt;
    if (causal) {
      for (Eigen::Index i = 0; i < L; ++i)
        for (Eigen::Index j = i + 1; j < S; ++j) s(i, j) = -std::numeric_limits<double>::infinity();
    }
    softmax_inplace(s);
    out.middleCols(h * dh, dh).noalias() = s * vv.middleCols(h * dh, dh);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  return t.push(
      std::move(out), q.requires_grad() || k.requires_grad() || v.requires_grad(),
      [iq, ik, iv, heads, dh, inv_sqrt, probs = std::move(probs)](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        const Matrix& qv = tp.value(iq);
        const Matrix& kv = tp.value(ik);
        const Matrix& vv = tp.value(iv);
        const bool gq = tp.requires_grad(iq), gk = tp.requires_grad(ik), gv = tp.requires_grad(iv);
        Matrix dq, dk, dv;
        if (gq) dq = Matrix::Zero(qv.rows(), qv.cols());
        if (gk) dk = Matrix::Zero(kv.rows(), kv.cols());
        if (gv) dv = Matrix::Zero(vv.rows(), vv.cols());
        for (int h = 0; h < heads; ++h) {
          const Matrix& a = probs[static_cast<std::size_t>(h)];
          const auto gh = g.middleCols(h * dh, dh);
          if (gv) dv.middleCols(h * dh, dh).noalias() += a.transpose() * gh;
          if (!gq && !gk) continue;
          Matrix da = gh * vv.middleCols(h * dh, dh).transpose();
          Matrix ds = softmax_backward(a, da) * inv_sqrt;
          if (gq) dq.middleCols(h * dh, dh).noalias() += ds * kv.middleCols(h * dh, dh);
          if (gk) dk.middleCols(h * dh, dh).noalias() += ds.transpose() * qv.middleCols(h * dh, dh);
        }
        if (gq) tp.accumulate(iq, dq);
        if (gk) tp.accumulate(ik, dk);
        if (gv) tp.accumulate(iv, dv);
      },
      "attention");
}

Var dropout(Var a, double rate, RngStream& rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorCode::kRuntime, "dropout: rate must be in [0,1)");
  if (rate == 0.0) return a;
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < rate ? 0.0 : keep;
  const int ia = a.id();
  Matrix out = x.cwiseProduct(mask);
  return t.push(std::move(out), a.requires_grad(),
                [ia, mask = std::move(mask)](Tape& tp, int self) {
                  tp.accumulate_expr(ia, tp.grad(self).cwiseProduct(mask));
                },
                "dropout");
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::kRuntime, "concat_rows: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  bool rg = false;
  for (const Var& p : parts) {
    require(p.tape() == &t, ErrorCode::kRuntime, "concat_rows: operands live on different tapes");
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    spans.emplace_back(p.id(), r);
    r += p.rows();
  }
  return t.push(std::move(out), rg,
                [spans = std::move(spans)](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  for (const auto& [id, start] : spans) {
                    if (tp.requires_grad(id))
                      tp.accumulate_expr(id, g.middleRows(start, tp.value(id).rows()));
                  }
                },
                "concat_rows");
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::kRuntime, "concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    require(p.tape() == &t, ErrorCode::kRuntime, "concat_cols: operands live on different tapes");
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    spans.emplace_back(p.id(), c);
    c += p.cols();
  }
  return t.push(std::move(out), rg,
                [spans = std::move(spans)](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  for (const auto& [id, start] : spans) {
                    if (tp.requires_grad(id))
                      tp.accumulate_expr(id, g.middleCols(start, tp.value(id).cols()));
                  }
                },
                "concat_cols");
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  Tape& t = tape_of(a);
  require(begin >= 0 && count >= 1 && begin + count <= a.rows(), ErrorCode::kRuntime,
          "slice_rows: range out of bounds for " + shape_str(a.value()));
  const int ia = a.id();
  return t.push(a.value().middleRows(begin, count), a.requires_grad(),
                [ia, begin, count](Tape& tp, int self) {
                  Matrix g = Matrix::Zero(tp.value(ia).rows(), tp.value(ia).cols());
                  g.middleRows(begin, count) = tp.grad(self);
                  tp.accumulate(ia, g);
                },
                "slice_rows");
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  Tape& t = tape_of(a);
  require(rows * cols == a.value().size(), ErrorCode::kRuntime,
          "reshape: cannot view " + shape_str(a.value()) + " as " + std::to_string(rows) + "x" +
              std::to_string(cols));
  const int ia = a.id();
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return t.push(std::move(out), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& src = tp.value(ia);
                  tp.accumulate_expr(
                      ia, Eigen::Map<const Matrix>(tp.grad(self).data(), src.rows(), src.cols()));
                },
                "reshape");
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& t = tape_of(table);
  const Matrix& tv = table.value();
  require(!ids.empty(), ErrorCode::kRuntime, "gather_rows: empty id list");
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < tv.rows(), ErrorCode::kRuntime,
            "gather_rows: id " + std::to_string(ids[i]) + " out of range for table " +
                shape_str(tv));
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  const int it = table.id();
  std::vector<int> idv(ids.begin(), ids.end());
  return t.push(std::move(out), table.requires_grad(),
                [it, idv = std::move(idv)](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  Matrix d = Matrix::Zero(tp.value(it).rows(), tp.value(it).cols());
                  for (std::size_t i = 0; i < idv.size(); ++i)
                    d.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
                  tp.accumulate(it, d);
                },
                "gather_rows");
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(scalar_matrix(a.value().sum()), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& x = tp.value(ia);
                  tp.accumulate_expr(ia, Matrix::Constant(x.rows(), x.cols(), tp.grad(self)(0, 0)));
                },
                "sum");
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var sum_squares(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(scalar_matrix(a.value().squaredNorm()), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  tp.accumulate_expr(ia, tp.value(ia) * (2.0 * tp.grad(self)(0, 0)));
                },
                "sum_squares");
}

Var mean_rows(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const double n = static_cast<double>(a.rows());
  return t.push(a.value().colwise().mean(), a.requires_grad(),
                [ia, n](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  Matrix d = g.replicate(tp.value(ia).rows(), 1) / n;
                  tp.accumulate(ia, d);
                },
                "mean_rows");
}

Var row_norms(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  Matrix out = a.value().rowwise().norm();
  return t.push(std::move(out), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& x = tp.value(ia);
                  const Matrix& nrm = tp.value(self);
                  const Matrix& g = tp.grad(self);
                  Matrix d = Matrix::Zero(x.rows(), x.cols());
                  for (Eigen::Index r = 0; r < x.rows(); ++r) {
                    if (nrm(r, 0) > 0.0) d.row(r) = x.row(r) * (g(r, 0) / nrm(r, 0));
                  }
                  tp.accumulate(ia, d);
                },
                "row_norms");
}

Var logsumexp(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  const double mx = x.maxCoeff();
  const double lse = mx + std::log((x.array() - mx).exp().sum());
  const int ia = a.id();
  return t.push(scalar_matrix(lse), a.requires_grad(),
                [ia](Tape& tp, int self) {
                  const Matrix& x = tp.value(ia);
                  const double lse = tp.value(self)(0, 0);
                  tp.accumulate_expr(ia, ((x.array() - lse).exp() * tp.grad(self)(0, 0)).matrix());
                },
                "logsumexp");
}

Var stop_gradient(Var a) {
  Tape& t = tape_of(a);
  return t.push(a.value(), false, nullptr, "stop_gradient");
}

Var straight_through(const Matrix& forward, Var through) {
  Tape& t = tape_of(through);
  same_shape("straight_through", forward, through.value());
  const int ia = through.id();
  return t.push(forward, through.requires_grad(),
                [ia](Tape& tp, int self) { tp.accumulate(ia, tp.grad(self)); },
                "straight_through");
}

Var cross_entropy(Var logits, std::span<const int> targets, int ignore_id) {
  Tape& t = tape_of(logits);
  const Matrix& lv = logits.value();
  require(static_cast<Eigen::Index>(targets.size()) <= lv.rows(), ErrorCode::kRuntime,
          "cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
              shape_str(lv));
  Matrix probs = lv.topRows(static_cast<Eigen::Index>(targets.size()));
  softmax_inplace(probs);
  double total = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int y = targets[i];
    if (y == ignore_id) continue;
    require(y >= 0 && y < lv.cols(), ErrorCode::kRuntime,
            "cross_entropy: target id " + std::to_string(y) + " out of range");
    const auto row = lv.row(static_cast<Eigen::Index>(i));
    const double mx = row.maxCoeff();
    total += mx + std::log((row.array() - mx).exp().sum()) - row(y);
    ++counted;
  }
  require(counted > 0, ErrorCode::kRuntime, "cross_entropy: every target position is padding");
  const int il = logits.id();
  std::vector<int> tv(targets.begin(), targets.end());
  return t.push(scalar_matrix(total / counted), logits.requires_grad(),
                [il, tv = std::move(tv), probs = std::move(probs), counted, ignore_id](Tape& tp,
                                                                                       int self) {
                  const Matrix& lv = tp.value(il);
                  const double g = tp.grad(self)(0, 0) / counted;
                  Matrix d = Matrix::Zero(lv.rows(), lv.cols());
                  for (std::size_t i = 0; i < tv.size(); ++i) {
                    if (tv[i] == ignore_id) continue;
                    const auto r = static_cast<Eigen::Index>(i);
                    d.row(r) = probs.row(r) * g;
                    d(r, tv[i]) -= g;
                  }
                  tp.accumulate(il, d);
                },
                "cross_entropy");
}

}  // namespace vip::core::ops
