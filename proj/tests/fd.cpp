#include "fd.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dualre/gradcheck.hpp"

namespace dualre::fdcheck {

double max_grad_error(const ScalarFn& f, std::vector<Tensor> inputs, double h, double floor) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t));
    Var out = f(tape, vars);
    tape.backward(out);
    for (const auto& v : vars) analytic.push_back(tape.grad_or_zero(v));
  }
  auto eval = [&] {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    return f(tape, vars).value().item();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& x = inputs[i].raw();
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double numeric = central_difference(eval, x[j], h);
      worst = std::max(worst, relative_error(analytic[i].raw()[j], numeric, floor));
    }
  }
  return worst;
}

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Tensor t(std::move(shape), 0.0);
  for (auto& v : t.raw()) v = d(rng);
  return t;
}

}  // namespace dualre::fdcheck
