#include "dualre/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dualre/error.hpp"
#include "dualre/kernels.hpp"

namespace dualre {

using kernels::Trans;

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an empty Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.owned;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.ref = &value;
  return push(std::move(n));
}

Var Tape::leaf_ref(const Tensor& value) {
  Node n;
  n.ref = &value;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ContractError("operands recorded on different tapes");
    n.requires_grad = n.requires_grad || requires_grad(v.id());
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  const Tensor& lv = loss.value();
  if (lv.size() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(lv.shape()));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  visits_ = 0;
  Node& root = nodes_[loss.id()];
  if (!root.requires_grad) return;
  root.grad = Tensor(lv.shape(), 1.0);
  root.has_grad = true;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.backward) continue;
    ++visits_;
    n.backward(*this, n.grad);
  }
}

const Tensor* Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.has_grad ? &n.grad : nullptr;
}

Tensor Tape::grad_or_zero(Var v) const {
  if (const Tensor* g = grad(v)) return *g;
  return Tensor(v.shape(), 0.0);
}

Tensor* Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(value(v.id()).shape(), 0.0);
    n.has_grad = true;
  }
  return &n.grad;
}

// ---------------------------------------------------------------------------
// ops

namespace ops {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("use of an empty Var");
  return *a.tape();
}

void add_into(Tensor* g, const Tensor& delta) {
  if (!g) return;
  auto gd = g->data();
  auto dd = delta.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += dd[i];
}

std::string two_shapes(const char* op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape());
}

// One softmax line: `len` elements starting at `base`, `stride` apart.
struct Line {
  std::size_t base, stride;
};

std::vector<Line> lines_along(const Tensor& x, std::size_t axis, std::size_t* len) {
  if (x.rank() == 0 || axis >= x.rank())
    throw DimensionError("softmax: axis " + std::to_string(axis) + " is empty for shape " + shape_str(x.shape()));
  std::vector<Line> lines;
  if (x.rank() == 1) {
    *len = x.size();
    lines.push_back({0, 1});
  } else if (x.rank() == 2) {
    const std::size_t r = x.dim(0), c = x.dim(1);
    if (axis == 1) {
      *len = c;
      for (std::size_t i = 0; i < r; ++i) lines.push_back({i * c, 1});
    } else {
      *len = r;
      for (std::size_t j = 0; j < c; ++j) lines.push_back({j, c});
    }
  } else {
    throw DimensionError("softmax: rank > 2 unsupported, got " + shape_str(x.shape()));
  }
  return lines;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
    throw DimensionError(two_shapes("matmul", A, B));
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C(Shape{m, n});
  kernels::gemm(Trans::No, Trans::No, m, n, k, A.data(), B.data(), C.data());
  return t.record(std::move(C), {a, b}, [a, b, m, n, k](Tape& tp, const Tensor& g) {
    if (Tensor* ga = tp.grad_buffer(a)) {
      Tensor tmp(Shape{m, k});
      kernels::gemm(Trans::No, Trans::Yes, m, k, n, g.data(), b.value().data(), tmp.data());
      add_into(ga, tmp);
    }
    if (Tensor* gb = tp.grad_buffer(b)) {
      Tensor tmp(Shape{k, n});
      kernels::gemm(Trans::Yes, Trans::No, k, n, m, a.value().data(), g.data(), tmp.data());
      add_into(gb, tmp);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() == B.shape()) {
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
      add_into(tp.grad_buffer(a), g);
      add_into(tp.grad_buffer(b), g);
    });
  }
  if (A.rank() == 2 && B.rank() == 1 && A.dim(1) == B.dim(0)) {
    const std::size_t r = A.dim(0), c = A.dim(1);
    Tensor out = A;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] += B[j];
    return t.record(std::move(out), {a, b}, [a, b, r, c](Tape& tp, const Tensor& g) {
      add_into(tp.grad_buffer(a), g);
      if (Tensor* gb = tp.grad_buffer(b)) {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) (*gb)[j] += g[i * c + j];
      }
    });
  }
  throw DimensionError(two_shapes("add", A, B));
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) throw DimensionError(two_shapes("sub", A, B));
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    add_into(tp.grad_buffer(a), g);
    if (Tensor* gb = tp.grad_buffer(b))
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) throw DimensionError(two_shapes("mul", A, B));
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (Tensor* ga = tp.grad_buffer(a)) {
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = tp.grad_buffer(b)) {
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.raw()) v *= c;
  return t.record(std::move(out), {a}, [a, c](Tape& tp, const Tensor& g) {
    if (Tensor* ga = tp.grad_buffer(a))
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += c * g[i];
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  Tape& t = tape_of(parts[0]);
  const Tensor& first = parts[0].value();
  const std::size_t rank = first.rank();
  if (rank != 1 && rank != 2) throw DimensionError("concat: rank must be 1 or 2, got " + shape_str(first.shape()));
  const std::size_t rows = first.rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != rank || v.rows() != rows) throw DimensionError(two_shapes("concat", first, v));
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out(rank == 1 ? Shape{total} : Shape{rows, total});
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data().begin() + r * widths[p], widths[p], out.data().begin() + r * total + off);
    off += widths[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), std::span<const Var>(inputs), [inputs, widths, rows, total](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
      if (Tensor* gp = tp.grad_buffer(inputs[p])) {
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < widths[p]; ++j) (*gp)[r * widths[p] + j] += g[r * total + off + j];
      }
      off += widths[p];
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& t = tape_of(table);
  const Tensor& T = table.value();
  if (T.rank() != 2) throw DimensionError("gather_rows: table must be a matrix, got " + shape_str(T.shape()));
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  const std::size_t V = T.dim(0), d = T.dim(1);
  Tensor out(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= V)
      throw ContractError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " + std::to_string(V) +
                          " rows");
    std::copy_n(T.data().begin() + static_cast<std::size_t>(ids[i]) * d, d, out.data().begin() + i * d);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return t.record(std::move(out), {table}, [table, idv, d](Tape& tp, const Tensor& g) {
    if (Tensor* gt = tp.grad_buffer(table))
      for (std::size_t i = 0; i < idv.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) (*gt)[static_cast<std::size_t>(idv[i]) * d + j] += g[i * d + j];
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  const Tensor& G = gain.value();
  const Tensor& B = bias.value();
  if (X.rank() < 1 || X.rank() > 2 || G.rank() != 1 || B.shape() != G.shape() || X.cols() != G.size())
    throw DimensionError("layer_norm: input " + shape_str(X.shape()) + " with gain " + shape_str(G.shape()) +
                         " and bias " + shape_str(B.shape()));
  const std::size_t rows = X.rows(), d = X.cols();
  Tensor out(X.shape());
  std::vector<double> xhat(X.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mu) * inv_std[r];
      out[r * d + j] = xhat[r * d + j] * G[j] + B[j];
    }
  }
  return t.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, d](Tape& tp,
                                                                                                   const Tensor& g) {
                    const Tensor& G = gain.value();
                    if (Tensor* gg = tp.grad_buffer(gain))
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t j = 0; j < d; ++j) (*gg)[j] += g[r * d + j] * xhat[r * d + j];
                    if (Tensor* gb = tp.grad_buffer(bias))
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t j = 0; j < d; ++j) (*gb)[j] += g[r * d + j];
                    if (Tensor* gx = tp.grad_buffer(x)) {
                      const double inv_d = 1.0 / static_cast<double>(d);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double m1 = 0.0, m2 = 0.0;
                        for (std::size_t j = 0; j < d; ++j) {
                          const double dxh = g[r * d + j] * G[j];
                          m1 += dxh;
                          m2 += dxh * xhat[r * d + j];
                        }
                        m1 *= inv_d;
                        m2 *= inv_d;
                        for (std::size_t j = 0; j < d; ++j) {
                          const double dxh = g[r * d + j] * G[j];
                          (*gx)[r * d + j] += inv_std[r] * (dxh - m1 - xhat[r * d + j] * m2);
                        }
                      }
                    }
                  });
}

Var gelu(Var x) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (auto& v : out.raw()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return t.record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x)) {
      const Tensor& X = x.value();
      const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < X.size(); ++i) {
        const double v = X[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        (*gx)[i] += g[i] * (cdf + v * pdf);
      }
    }
  });
}

Var relu(Var x) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (auto& v : out.raw()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x)) {
      const Tensor& X = x.value();
      for (std::size_t i = 0; i < X.size(); ++i)
        if (X[i] > 0.0) (*gx)[i] += g[i];
    }
  });
}

Var softmax(Var x, std::size_t axis) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  std::size_t len = 0;
  auto lines = lines_along(X, axis, &len);
  Tensor out(X.shape());
  for (const Line& ln : lines) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, X[ln.base + i * ln.stride]);
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(X[ln.base + i * ln.stride] - mx);
      out[ln.base + i * ln.stride] = e;
      s += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[ln.base + i * ln.stride] /= s;
  }
  Tensor saved = out;
  return t.record(std::move(out), {x}, [x, lines, len, y = std::move(saved)](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x)) {
      for (const Line& ln : lines) {
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) dot += g[ln.base + i * ln.stride] * y[ln.base + i * ln.stride];
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t at = ln.base + i * ln.stride;
          (*gx)[at] += y[at] * (g[at] - dot);
        }
      }
    }
  });
}

Var log_softmax(Var x) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 1) throw DimensionError("log_softmax: expects a vector, got " + shape_str(X.shape()));
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : X.data()) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : X.data()) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  Tensor out = X;
  for (auto& v : out.raw()) v -= lse;
  Tensor saved = out;
  return t.record(std::move(out), {x}, [x, ls = std::move(saved)](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x)) {
      double gs = 0.0;
      for (double v : g.data()) gs += v;
      for (std::size_t i = 0; i < ls.size(); ++i) (*gx)[i] += g[i] - std::exp(ls[i]) * gs;
    }
  });
}

Var attention(Var q, Var k, Var v, std::span<const std::uint8_t> key_mask) {
  Tape& t = tape_of(q);
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  if (Q.rank() != 2 || K.rank() != 2 || V.rank() != 2 || Q.dim(1) != K.dim(1) || K.dim(0) != V.dim(0))
    throw DimensionError("attention: q " + shape_str(Q.shape()) + ", k " + shape_str(K.shape()) + ", v " +
                         shape_str(V.shape()));
  const std::size_t nq = Q.dim(0), nk = K.dim(0), dk = Q.dim(1), dv = V.dim(1);
  Tensor P = attention_probs(Q, K, key_mask);
  Tensor out(Shape{nq, dv});
  kernels::gemm(Trans::No, Trans::No, nq, dv, nk, P.data(), V.data(), out.data());
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));
  return t.record(std::move(out), {q, k, v},
                  [q, k, v, P = std::move(P), nq, nk, dk, dv, inv_scale](Tape& tp, const Tensor& g) {
                    Tensor* gq = tp.grad_buffer(q);
                    Tensor* gk = tp.grad_buffer(k);
                    if (Tensor* gv = tp.grad_buffer(v)) {
                      Tensor tmp(Shape{nk, dv});
                      kernels::gemm(Trans::Yes, Trans::No, nk, dv, nq, P.data(), g.data(), tmp.data());
                      add_into(gv, tmp);
                    }
                    if (!gq && !gk) return;
                    Tensor dP(Shape{nq, nk});
                    kernels::gemm(Trans::No, Trans::Yes, nq, nk, dv, g.data(), v.value().data(), dP.data());
                    // dS = P * (dP - rowsum(dP * P)), folded with the 1/sqrt(dk) scale.
                    Tensor dS(Shape{nq, nk});
                    for (std::size_t i = 0; i < nq; ++i) {
                      double dot = 0.0;
                      for (std::size_t j = 0; j < nk; ++j) dot += dP[i * nk + j] * P[i * nk + j];
                      for (std::size_t j = 0; j < nk; ++j)
                        dS[i * nk + j] = P[i * nk + j] * (dP[i * nk + j] - dot) * inv_scale;
                    }
                    if (gq) {
                      Tensor tmp(Shape{nq, dk});
                      kernels::gemm(Trans::No, Trans::No, nq, dk, nk, dS.data(), k.value().data(), tmp.data());
                      add_into(gq, tmp);
                    }
                    if (gk) {
                      Tensor tmp(Shape{nk, dk});
                      kernels::gemm(Trans::Yes, Trans::No, nk, dk, nq, dS.data(), q.value().data(), tmp.data());
                      add_into(gk, tmp);
                    }
                  });
}

Var log(Var x) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (auto& v : out.raw()) {
    if (!(v > 0.0)) throw ContractError("log: argument must be positive");
    v = std::log(v);
  }
  return t.record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x)) {
      const Tensor& X = x.value();
      for (std::size_t i = 0; i < X.size(); ++i) (*gx)[i] += g[i] / X[i];
    }
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return t.record(Tensor::scalar(s), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x))
      for (auto& v : gx->raw()) v += g[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var slice_row(Var x, std::size_t row) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2) throw DimensionError("slice_row: expects a matrix, got " + shape_str(X.shape()));
  if (row >= X.dim(0))
    throw ContractError("slice_row: row " + std::to_string(row) + " out of range for " + shape_str(X.shape()));
  const std::size_t d = X.dim(1);
  Tensor out(Shape{d});
  std::copy_n(X.data().begin() + row * d, d, out.data().begin());
  return t.record(std::move(out), {x}, [x, row, d](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x))
      for (std::size_t j = 0; j < d; ++j) (*gx)[row * d + j] += g[j];
  });
}

Var reshape(Var x, Shape shape) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (shape_numel(shape) != X.size())
    throw DimensionError("reshape: cannot view " + shape_str(X.shape()) + " as " + shape_str(shape));
  Tensor out(std::move(shape), X.raw());
  return t.record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x))
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g[i];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 2 || begin >= end || end > X.dim(1))
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                         shape_str(X.shape()));
  const std::size_t r = X.dim(0), c = X.dim(1), w = end - begin;
  Tensor out(Shape{r, w});
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(X.data().begin() + i * c + begin, w, out.data().begin() + i * w);
  return t.record(std::move(out), {x}, [x, r, c, w, begin](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) (*gx)[i * c + begin + j] += g[i * w + j];
  });
}

Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw DimensionError("stack: no operands");
  Tape& t = tape_of(scalars[0]);
  Tensor out(Shape{scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& s = scalars[i].value();
    if (s.size() != 1) throw DimensionError("stack: operand " + std::to_string(i) + " is not a scalar");
    out[i] = s[0];
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return t.record(std::move(out), std::span<const Var>(inputs), [inputs](Tape& tp, const Tensor& g) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (Tensor* gi = tp.grad_buffer(inputs[i])) (*gi)[0] += g[i];
  });
}

Var pick(Var x, std::size_t index) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  if (X.rank() != 1) throw DimensionError("pick: expects a vector, got " + shape_str(X.shape()));
  if (index >= X.size())
    throw ContractError("pick: index " + std::to_string(index) + " out of range for " + shape_str(X.shape()));
  return t.record(Tensor::scalar(X[index]), {x}, [x, index](Tape& tp, const Tensor& g) {
    if (Tensor* gx = tp.grad_buffer(x)) (*gx)[index] += g[0];
  });
}

Var cosine(Var u, Var v) {
  Tape& t = tape_of(u);
  const Tensor& U = u.value();
  const Tensor& W = v.value();
  if (U.rank() != 1 || U.shape() != W.shape()) throw DimensionError(two_shapes("cosine", U, W));
  double uu = 0.0, ww = 0.0, uw = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    uu += U[i] * U[i];
    ww += W[i] * W[i];
    uw += U[i] * W[i];
  }
  const double nu = std::sqrt(uu), nw = std::sqrt(ww);
  if (nu < kCosineEps || nw < kCosineEps) return t.constant(Tensor::scalar(0.0));
  const double c = uw / (nu * nw);
  return t.record(Tensor::scalar(c), {u, v}, [u, v, nu, nw, c](Tape& tp, const Tensor& g) {
    const Tensor& U = u.value();
    const Tensor& W = v.value();
    if (Tensor* gu = tp.grad_buffer(u))
      for (std::size_t i = 0; i < U.size(); ++i) (*gu)[i] += g[0] * (W[i] / (nu * nw) - c * U[i] / (nu * nu));
    if (Tensor* gw = tp.grad_buffer(v))
      for (std::size_t i = 0; i < W.size(); ++i) (*gw)[i] += g[0] * (U[i] / (nu * nw) - c * W[i] / (nw * nw));
  });
}

}  // namespace ops

Tensor attention_probs(const Tensor& q, const Tensor& k, std::span<const std::uint8_t> key_mask) {
  const std::size_t nq = q.dim(0), nk = k.dim(0), dk = q.dim(1);
  if (!key_mask.empty() && key_mask.size() != nk)
    throw DimensionError("attention: key mask of length " + std::to_string(key_mask.size()) + " for " +
                         std::to_string(nk) + " keys");
  if (!key_mask.empty() && std::none_of(key_mask.begin(), key_mask.end(), [](auto m) { return m != 0; }))
    throw ContractError("attention: every key is masked");
  Tensor S(Shape{nq, nk});
  kernels::gemm(Trans::No, Trans::Yes, nq, nk, dk, q.data(), k.data(), S.data());
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));
  for (std::size_t i = 0; i < nq; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nk; ++j) {
      double& s = S[i * nk + j];
      s *= inv_scale;
      if (key_mask.empty() || key_mask[j]) mx = std::max(mx, s);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
      double& s = S[i * nk + j];
      s = (key_mask.empty() || key_mask[j]) ? std::exp(s - mx) : 0.0;
      z += s;
    }
    for (std::size_t j = 0; j < nk; ++j) S[i * nk + j] /= z;
  }
  return S;
}

}  // namespace dualre
