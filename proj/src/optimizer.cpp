#include "dualre/optimizer.hpp"

#include <cmath>

#include "dualre/error.hpp"

namespace dualre {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ContractError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ContractError("Adam eps must be positive");
}

Adam::Adam(const ParamStore& store, AdamConfig config) : config_(config) {
  config_.validate();
  for (ParamId i = 0; i < store.size(); ++i) {
    m_.emplace_back(store.value(i).shape(), 0.0);
    v_.emplace_back(store.value(i).shape(), 0.0);
  }
}

void Adam::step(ParamStore& store, const Gradients& grads) {
  if (grads.size() != m_.size()) throw ContractError("Adam: gradient count does not match the parameter store");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (ParamId i = 0; i < m_.size(); ++i) {
    double* w = store.value(i).raw().data();
    const double* g = grads[i].raw().data();
    double* m = m_[i].raw().data();
    double* v = v_[i].raw().data();
    const std::size_t n = m_[i].size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      w[j] -= config_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
    }
  }
}

}  // namespace dualre
