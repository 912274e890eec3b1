#include "dualre/params.hpp"

#include <cmath>

#include "dualre/error.hpp"

namespace dualre {

ParamId ParamStore::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ContractError("duplicate parameter name " + name);
  const ParamId id = values_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return id;
}

std::optional<ParamId> ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParamStore::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Gradients::Gradients(const ParamStore& store) {
  grads_.reserve(store.size());
  for (ParamId i = 0; i < store.size(); ++i) grads_.emplace_back(store.value(i).shape(), 0.0);
}

void Gradients::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

void Gradients::accumulate(const Gradients& other, double scale) {
  if (other.grads_.size() != grads_.size()) throw ContractError("gradient sets of different models");
  for (std::size_t p = 0; p < grads_.size(); ++p) {
    auto dst = grads_[p].data();
    auto src = other.grads_[p].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

bool Gradients::all_finite() const {
  for (const auto& g : grads_)
    if (!g.all_finite()) return false;
  return true;
}

ParamBinding::ParamBinding(Tape& tape, const ParamStore& store, bool requires_grad)
    : tape_(tape), store_(store), requires_grad_(requires_grad), bound_(store.size()) {}

Var ParamBinding::operator()(ParamId id) {
  auto& slot = bound_.at(id);
  if (!slot) slot = requires_grad_ ? tape_.leaf_ref(store_.value(id)) : tape_.constant_ref(store_.value(id));
  return *slot;
}

void ParamBinding::collect(Gradients& grads) const {
  for (ParamId id = 0; id < bound_.size(); ++id) {
    if (!bound_[id]) continue;
    if (const Tensor* g = tape_.grad(*bound_[id])) {
      auto dst = grads[id].data();
      auto src = g->data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

Tensor random_normal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.raw()) v = dist(rng);
  return t;
}

}  // namespace dualre
