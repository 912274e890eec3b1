#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualre/autograd.hpp"
#include "dualre/tensor.hpp"

namespace dualre {

using ParamId = std::size_t;
using Rng = std::mt19937_64;

/// Named learnable arrays, addressable by name ("enc_T.layer0.attn.Wq") or id.
class ParamStore {
 public:
  ParamId add(std::string name, Tensor value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }
  Tensor& value(ParamId id) { return values_.at(id); }
  std::optional<ParamId> find(const std::string& name) const;
  ParamId id(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

  std::size_t num_scalars() const;

  // Bitwise equality of names, shapes and values.
  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, ParamId> index_;
};

/// One gradient buffer per parameter, zero until accumulated into.
class Gradients {
 public:
  explicit Gradients(const ParamStore& store);

  Tensor& operator[](ParamId id) { return grads_.at(id); }
  const Tensor& operator[](ParamId id) const { return grads_.at(id); }
  std::size_t size() const { return grads_.size(); }

  void zero();
  // this += scale * other
  void accumulate(const Gradients& other, double scale = 1.0);
  bool all_finite() const;

 private:
  std::vector<Tensor> grads_;
};

/// Lazily binds parameters to leaves of one tape. With requires_grad false
/// the parameters enter the tape as constants (inference).
class ParamBinding {
 public:
  ParamBinding(Tape& tape, const ParamStore& store, bool requires_grad = true);

  Var operator()(ParamId id);
  Tape& tape() { return tape_; }
  const ParamStore& store() const { return store_; }

  // Adds every bound parameter's tape gradient into grads. Unreached
  // parameters contribute nothing.
  void collect(Gradients& grads) const;

 private:
  Tape& tape_;
  const ParamStore& store_;
  bool requires_grad_;
  std::vector<std::optional<Var>> bound_;
};

// N(0, stddev^2) entries.
Tensor random_normal(Shape shape, double stddev, Rng& rng);

}  // namespace dualre
