#include "dualre/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "dualre/error.hpp"

namespace dualre {

double central_difference(const std::function<double()>& f, double& x, double h) {
  const double x0 = x;
  x = x0 + h;
  const double up = f();
  x = x0 - h;
  const double down = f();
  x = x0;
  return (up - down) / (2.0 * h);
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

bool GradcheckReport::pass() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupCheck& g) { return g.pass; });
}

std::string GradcheckReport::to_text() const {
  std::size_t w = 5;
  for (const auto& g : groups) w = std::max(w, g.name.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %12s %12s  %s\n", static_cast<int>(w), "group", "entries", "max_rel_err",
                "max_|grad|", "result");
  os << buf;
  for (const auto& g : groups) {
    std::snprintf(buf, sizeof buf, "%-*s %8zu %12.3e %12.3e  %s\n", static_cast<int>(w), g.name.c_str(), g.entries,
                  g.max_rel_error, g.max_abs_grad, g.pass ? "PASS" : "FAIL");
    os << buf;
  }
  return os.str();
}

namespace {

// [CLS] words [SUB] words [/SUB] words [OBJ] words [/OBJ] words [SEP] with
// random word ids; the roles may appear in either order.
PaddedSequence random_sequence(std::size_t len, std::size_t vocab_size, Rng& rng) {
  if (len < 7) throw ContractError("gradcheck: sequences need at least 7 tokens");
  std::uniform_int_distribution<int> word(4, static_cast<int>(vocab_size) - 1);
  PaddedSequence s;
  s.ids.resize(len);
  s.mask.assign(len, 1);
  s.ids.front() = Vocab::cls_id();
  s.ids.back() = Vocab::sep_id();
  for (std::size_t i = 1; i + 1 < len; ++i) s.ids[i] = word(rng);
  std::uniform_int_distribution<std::size_t> first(1, len / 2 - 1);
  std::uniform_int_distribution<std::size_t> second(len / 2, len - 3);
  std::size_t a = first(rng), b = second(rng);
  if (rng() & 1) std::swap(a, b);
  s.sub_start_pos = a;
  s.obj_start_pos = b;
  return s;
}

}  // namespace

GradcheckReport gradcheck_model(const GradcheckConfig& config) {
  if (config.max_tokens < 7) throw ContractError("gradcheck: max_tokens must be at least 7");
  EncoderConfig enc = config.encoder;
  enc.max_len = std::max(enc.max_len, config.max_tokens);
  ModelParams params = init_model(enc, config.model, config.num_predicates, config.seed);

  Rng rng(mix_seed(config.seed, 99));
  std::uniform_int_distribution<std::size_t> len(7, config.max_tokens);
  const PaddedSequence input = random_sequence(len(rng), enc.vocab_size, rng);
  std::vector<PaddedSequence> descs;
  for (std::size_t r = 0; r < config.num_predicates; ++r) descs.push_back(random_sequence(len(rng), enc.vocab_size, rng));
  const std::size_t gold = std::uniform_int_distribution<std::size_t>(0, config.num_predicates - 1)(rng);

  auto loss_value = [&]() {
    Tape tape;
    ParamBinding bind(tape, params.store, false);
    return forward_pair(bind, params, input, descs, gold).l_u->value().item();
  };

  Gradients grads(params.store);
  GradcheckReport report;
  {
    Tape tape;
    ParamBinding bind(tape, params.store, true);
    auto f = forward_pair(bind, params, input, descs, gold);
    report.loss = f.l_u->value().item();
    tape.backward(*f.l_u);
    bind.collect(grads);
  }

  for (ParamId id = 0; id < params.store.size(); ++id) {
    GroupCheck g;
    g.name = params.store.name(id);
    const auto& a = grads[id].raw();
    auto& w = params.store.value(id).raw();
    std::vector<std::size_t> entries(a.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (config.max_entries_per_group > 0 && entries.size() > config.max_entries_per_group) {
      std::stable_sort(entries.begin(), entries.end(),
                       [&](std::size_t x, std::size_t y) { return std::abs(a[x]) > std::abs(a[y]); });
      const std::size_t top = config.max_entries_per_group / 2;
      std::shuffle(entries.begin() + static_cast<std::ptrdiff_t>(top), entries.end(), rng);
      entries.resize(config.max_entries_per_group);
    }
    for (std::size_t j : entries) {
      const double numeric = central_difference(loss_value, w[j], config.h);
      g.max_rel_error = std::max(g.max_rel_error, relative_error(a[j], numeric, config.floor));
      g.max_abs_grad = std::max(g.max_abs_grad, std::abs(a[j]));
      ++g.entries;
    }
    g.pass = g.max_rel_error < config.tolerance;
    report.groups.push_back(g);
  }
  return report;
}

}  // namespace dualre
