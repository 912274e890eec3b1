#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "dualre/tensor.hpp"

namespace dualre {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so
/// every node's inputs precede it; backward walks the record once in reverse.
///
/// A tape belongs to one thread. Several tapes may read the same parameter
/// tensors concurrently through leaf_ref/constant_ref since gradients are
/// kept on the tape, never written into the referenced tensors.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  // The referenced tensor must outlive the tape and stay unchanged.
  Var constant_ref(const Tensor& value);
  Var leaf_ref(const Tensor& value);

  // Records an operation. The node requires grad when any input does; the
  // backward function is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  void backward(Var loss);

  // Gradient accumulated for v, or nullptr if backward never reached it.
  const Tensor* grad(Var v) const;
  Tensor grad_or_zero(Var v) const;

  // Used inside backward functions: zero-initialised on first access,
  // nullptr when v does not require grad.
  Tensor* grad_buffer(Var v);

  const Tensor& value(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Number of nodes whose backward function ran during the last backward().
  std::size_t backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::size_t visits_ = 0;
};

namespace ops {

// Rank-2 product; backward dA = dC B^T, dB = A^T dC.
Var matmul(Var a, Var b);
// Same shapes, or a matrix plus a row vector broadcast over rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
// Concatenation along the last axis. Inputs share rank and leading extent.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Rows of table[V x d] selected by ids, giving [n x d].
Var gather_rows(Var table, std::span<const int> ids);
// Normalises each row (or the vector) to zero mean, unit variance.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var gelu(Var x);
// Subgradient 0 at exactly 0.
Var relu(Var x);
// axis < rank; max-subtracted for stability.
Var softmax(Var x, std::size_t axis);
Var log_softmax(Var x);
// softmax(q k^T / sqrt(d_k), masked keys excluded) v. key_mask empty means
// all keys valid; otherwise nonzero marks a valid key.
Var attention(Var q, Var k, Var v, std::span<const std::uint8_t> key_mask);
Var log(Var x);
Var sum(Var x);
Var mean(Var x);
Var slice_row(Var x, std::size_t row);
// Same data, new shape with equal element count.
Var reshape(Var x, Shape shape);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
// Scalars into a vector.
Var stack(std::span<const Var> scalars);
Var pick(Var x, std::size_t index);

inline constexpr double kCosineEps = 1e-12;
// (u . v) / (|u| |v|); 0 with zero gradient when either norm is below kCosineEps.
Var cosine(Var u, Var v);

}  // namespace ops

// Attention probabilities for inspection (same masking rules as ops::attention).
Tensor attention_probs(const Tensor& q, const Tensor& k, std::span<const std::uint8_t> key_mask);

}  // namespace dualre
