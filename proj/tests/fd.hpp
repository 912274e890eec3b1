#pragma once

#include <functional>
#include <vector>

#include "dualre/autograd.hpp"

namespace dualre::fdcheck {

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over
// every entry of every input, with central differences of step h.
double max_grad_error(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5, double floor = 1e-6);

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0);

}  // namespace dualre::fdcheck
