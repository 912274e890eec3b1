#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dualre/encoder.hpp"
#include "dualre/model.hpp"

namespace dualre {

// (f(x + h) - f(x - h)) / 2h, restoring x afterwards.
double central_difference(const std::function<double()>& f, double& x, double h);

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

struct GradcheckConfig {
  EncoderConfig encoder{1, 2, 8, 16, 16, 16, 0.5};
  ModelConfig model = [] {
    ModelConfig m;
    m.d = 4;
    m.copy_init_description_encoder = false;
    return m;
  }();
  std::size_t num_predicates = 3;
  std::size_t max_tokens = 12;
  double h = 1e-5;
  double floor = 1e-6;
  double tolerance = 1e-3;
  // 0 checks every entry; otherwise at most this many per group, half the
  // largest |analytic| entries and half chosen at random.
  std::size_t max_entries_per_group = 0;
  std::uint64_t seed = 7;
};

struct GroupCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  std::vector<GroupCheck> groups;
  double loss = 0.0;
  bool pass() const;
  std::string to_text() const;
};

// Random toy model and one random candidate pair; compares the unified
// loss's analytic gradient with central differences for every named array.
GradcheckReport gradcheck_model(const GradcheckConfig& config);

}  // namespace dualre
