#pragma once

#include <cstddef>
#include <vector>

#include "dualre/params.hpp"

namespace dualre {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Adam with bias correction and a constant learning rate.
class Adam {
 public:
  Adam(const ParamStore& store, AdamConfig config);

  void step(ParamStore& store, const Gradients& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace dualre
