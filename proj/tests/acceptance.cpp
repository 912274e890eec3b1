// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dualre/checkpoint.hpp"
#include "dualre/cli.hpp"
#include "dualre/gradcheck.hpp"
#include "dualre/marking.hpp"
#include "dualre/metrics.hpp"
#include "dualre/model.hpp"
#include "dualre/synthetic.hpp"
#include "dualre/train.hpp"
#include "fd.hpp"

using namespace dualre;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kSource = DUALRE_SOURCE_DIR;
const fs::path kCorpus = kSource / "data" / "synthetic";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome guarded(const std::function<Outcome()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small encoder used wherever a criterion is about mechanics rather than accuracy.
EncoderConfig small_encoder() { return EncoderConfig{1, 2, 16, 32, 128, 0, 0.02}; }

ModelConfig small_model() {
  ModelConfig m;
  m.d = 16;
  return m;
}

struct Corpus {
  PredicateSchema schema = PredicateSchema::load(kCorpus / "schema.yaml");
  std::vector<REInstance> train = parse_dataset(kCorpus / "train.jsonl", schema);
  std::vector<REInstance> dev = parse_dataset(kCorpus / "dev.jsonl", schema);
  std::vector<REInstance> test = parse_dataset(kCorpus / "test.jsonl", schema);
  Vocab vocab = build_vocab(train, schema, 1);
  TrainData data() const { return {train, dev, &schema, &vocab}; }
};

// ---------------------------------------------------------------------------

Var weighted(Tape& t, Var v, std::uint64_t seed) {
  return ops::sum(ops::mul(v, t.constant(fdcheck::random_tensor(v.value().shape(), seed))));
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  using fdcheck::max_grad_error;
  using fdcheck::random_tensor;
  using V = const std::vector<Var>&;
  std::vector<std::pair<std::string, double>> prim;
  prim.emplace_back("matmul", max_grad_error([](Tape& t, V v) { return weighted(t, ops::matmul(v[0], v[1]), 1); },
                                             {random_tensor({3, 4}, 11), random_tensor({4, 5}, 12)}));
  prim.emplace_back("add_row", max_grad_error([](Tape& t, V v) { return weighted(t, ops::add(v[0], v[1]), 2); },
                                              {random_tensor({3, 4}, 13), random_tensor({4}, 14)}));
  prim.emplace_back("concat", max_grad_error([](Tape& t, V v) { return weighted(t, ops::concat({v[0], v[1]}), 3); },
                                             {random_tensor({2, 3}, 15), random_tensor({2, 2}, 16)}));
  prim.emplace_back("gather_rows", max_grad_error(
                                       [](Tape& t, V v) {
                                         const std::vector<int> ids = {2, 0, 2, 4};
                                         return weighted(t, ops::gather_rows(v[0], ids), 4);
                                       },
                                       {random_tensor({5, 3}, 17)}));
  prim.emplace_back("layer_norm",
                    max_grad_error([](Tape& t, V v) { return weighted(t, ops::layer_norm(v[0], v[1], v[2]), 5); },
                                   {random_tensor({3, 6}, 18), random_tensor({6}, 19), random_tensor({6}, 20)}));
  prim.emplace_back("gelu", max_grad_error([](Tape& t, V v) { return weighted(t, ops::gelu(v[0]), 6); },
                                           {random_tensor({4, 3}, 21)}));
  prim.emplace_back("softmax", max_grad_error([](Tape& t, V v) { return weighted(t, ops::softmax(v[0], 1), 7); },
                                              {random_tensor({3, 5}, 22)}));
  prim.emplace_back("log_softmax", max_grad_error([](Tape& t, V v) { return weighted(t, ops::log_softmax(v[0]), 8); },
                                                  {random_tensor({6}, 23)}));
  prim.emplace_back("attention", max_grad_error(
                                     [](Tape& t, V v) {
                                       const std::vector<std::uint8_t> mask = {1, 1, 0, 1};
                                       return weighted(t, ops::attention(v[0], v[1], v[2], mask), 9);
                                     },
                                     {random_tensor({4, 4}, 24), random_tensor({4, 4}, 25), random_tensor({4, 4}, 26)}));
  prim.emplace_back("cosine", max_grad_error([](Tape& t, V v) { return ops::scale(ops::cosine(v[0], v[1]), 3.0); },
                                             {random_tensor({5}, 27), random_tensor({5}, 28)}));
  double worst_prim = 0.0;
  std::string worst_name;
  for (const auto& [n, e] : prim)
    if (e >= worst_prim) worst_prim = e, worst_name = n;

  GradcheckConfig cfg;  // every entry of every group
  const GradcheckReport rep = gradcheck_model(cfg);
  double worst = 0.0;
  std::size_t entries = 0;
  for (const auto& g : rep.groups) worst = std::max(worst, g.max_rel_error), entries += g.entries;
  const double secs = seconds_since(t0);
  const bool ok = rep.pass() && worst < 1e-3 && worst_prim < 1e-4 && secs < 60.0;
  return {ok, std::to_string(rep.groups.size()) + " groups, " + std::to_string(entries) +
                  " entries, max rel err " + fmt("%.2e", worst) + "; primitives max " + fmt("%.2e", worst_prim) +
                  " (" + worst_name + "); " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Scalar oracles: explicit loops over R.

double oracle_contrastive(const std::vector<double>& sims, std::size_t gold, double tau) {
  double mx = -1e300;
  for (double s : sims) mx = std::max(mx, s / tau);
  double z = 0.0;
  for (double s : sims) z += std::exp(s / tau - mx);
  return -(sims[gold] / tau - mx - std::log(z));
}

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double oracle_ce(const std::vector<double>& rho, const std::vector<std::vector<double>>& w,
                 const std::vector<double>& bias, std::size_t gold) {
  const std::size_t r = bias.size();
  std::vector<double> logits(r);
  for (std::size_t j = 0; j < r; ++j) {
    logits[j] = bias[j];
    for (std::size_t i = 0; i < rho.size(); ++i) logits[j] += rho[i] * w[i][j];
  }
  double mx = -1e300;
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return -(logits[gold] - mx - std::log(z));
}

Outcome loss_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t r = 1 + rng() % 8;
    const std::size_t d = 2 + rng() % 7;
    const std::size_t gold = rng() % r;
    const double tau = trial % 2 ? 1.0 : 0.2 + (unit(rng) + 1.0);

    // Contrastive loss from representations.
    std::vector<double> rt(d);
    for (auto& x : rt) x = 3.0 * unit(rng);
    std::vector<std::vector<double>> rd(r, std::vector<double>(d));
    for (auto& v : rd)
      for (auto& x : v) x = 3.0 * unit(rng);
    std::vector<double> sims(r);
    for (std::size_t j = 0; j < r; ++j) sims[j] = oracle_cosine(rt, rd[j]);
    {
      Tape t;
      std::vector<Var> rdv;
      for (const auto& v : rd) rdv.push_back(t.constant(Tensor::vector(v)));
      const double got = contrastive_loss(t.constant(Tensor::vector(rt)), rdv, gold, tau).value().item();
      worst = std::max(worst, std::abs(got - oracle_contrastive(sims, gold, tau)));
    }

    // CE head of a real model with randomised weights and bias.
    ModelConfig mc;
    mc.d = d;
    ModelParams p = init_model(EncoderConfig{1, 2, 8, 16, 16, 16, 0.1}, mc, r, 1000 + trial);
    std::vector<std::vector<double>> w(d, std::vector<double>(r));
    std::vector<double> bias(r);
    Tensor& wt = p.store.value(p.w_ce);
    Tensor& bt = p.store.value(p.b_ce);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < r; ++j) wt.at(i, j) = w[i][j] = 2.0 * unit(rng);
    for (std::size_t j = 0; j < r; ++j) bt[j] = bias[j] = unit(rng);
    {
      Tape t;
      ParamBinding bind(t, p.store, true);
      const double got = ce_loss(bind, p, t.constant(Tensor::vector(rt)), gold).value().item();
      worst = std::max(worst, std::abs(got - oracle_ce(rt, w, bias, gold)));
    }
  }

  auto ct = [](std::vector<double> s, std::size_t g) {
    Tape t;
    return contrastive_loss_from_similarities(t.constant(Tensor::vector(std::move(s))), g, 1.0).value().item();
  };
  const double a1 = std::abs(ct({0.4, 0.4, 0.4}, 2) - std::log(3.0));
  const double a2 = std::abs(ct({1.0, 0.0, 0.0}, 0) - std::log(1.0 + 2.0 / std::exp(1.0)));
  const bool ok = worst < 1e-9 && a1 < 1e-12 && a2 < 1e-12;
  return {ok, std::to_string(trials) + " trials, max |diff| " + fmt("%.2e", worst) + "; ln 3 anchor " +
                  fmt("%.1e", a1) + ", ln(1+2/e) anchor " + fmt("%.1e", a2)};
}

// ---------------------------------------------------------------------------

Outcome synthetic_separability() {
  const auto t0 = Clock::now();
  const RunConfig c = load_run_config(kCorpus / "config.yaml");
  const PredicateSchema schema = PredicateSchema::load(c.schema);
  const auto train_set = parse_dataset(c.train, schema);
  const auto dev_set = parse_dataset(c.dev, schema);
  const Vocab vocab = build_vocab(train_set, schema, c.min_freq);
  const TrainResult r = train({train_set, dev_set, &schema, &vocab}, c.encoder, c.model, c.training);
  const double secs = seconds_since(t0);
  double best = 0.0;
  std::string curve;
  for (const auto& e : r.log) {
    best = std::max(best, e.dev_f1);
    curve += (curve.empty() ? "" : " ") + fmt("%.3f", e.dev_f1);
  }
  const bool ok = best >= 0.95 && r.log.size() <= 10 && secs < 600.0 && train_set.size() == 200;
  return {ok, std::to_string(train_set.size()) + " train instances, " + std::to_string(r.log.size()) +
                  " epochs, best dev F1 " + fmt("%.4f", best) + " at epoch " + std::to_string(r.best_epoch) +
                  ", " + fmt("%.0f", secs) + " s; per-epoch F1 [" + curve + "]"};
}

// ---------------------------------------------------------------------------

Outcome ablation_mechanics() {
  const Corpus corpus;
  TrainConfig tc;
  tc.epochs = 2;
  const auto rows = ablate(corpus.data(), corpus.test, small_encoder(), small_model(), tc);
  bool ran = rows.size() == 4;
  for (const auto& row : rows) ran = ran && row.test.num_pairs > 0 && std::isfinite(row.test.micro_f1);

  EncoderConfig enc = small_encoder();
  auto model_with = [&](auto tweak, std::uint64_t seed = 5) {
    ModelConfig m = small_model();
    tweak(m);
    return make_model(corpus.schema, corpus.vocab, enc, m, seed);
  };
  const auto pairs = generate_pairs(corpus.train[0], 0, corpus.schema);
  const Model probe = model_with([](ModelConfig&) {});
  const Batch batch = make_batch(pairs, corpus.train, corpus.schema, corpus.vocab, probe.limits());

  // CLS off: rho_D ignores the [CLS] it is given.
  const Model no_cls = model_with([](ModelConfig& m) { m.use_cls_concat = false; });
  bool cls_ok = true;
  {
    Tape t;
    ParamBinding b(t, no_cls.params.store, false);
    for (std::size_t r = 0; r < corpus.schema.num_predicates(); ++r) {
      const auto& desc = batch.descriptions_of(0)[r];
      const Tensor a = rho_D(b, no_cls.params, desc, t.constant(Tensor(Shape{enc.d_model}, 0.0))).value();
      const Tensor z = rho_D(b, no_cls.params, desc, t.constant(fdcheck::random_tensor({enc.d_model}, r, 5.0))).value();
      cls_ok = cls_ok && a == z;
    }
  }

  // CE off: W_ce and b_ce get exactly zero gradient.
  const Model no_ce = model_with([](ModelConfig& m) { m.use_ce_loss = false; });
  bool ce_ok = true;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tape t;
    ParamBinding b(t, no_ce.params.store, true);
    const auto f = forward_pair(b, no_ce.params, batch.inputs[i], batch.descriptions_of(i), batch.pairs[i].label);
    t.backward(*f.l_u);
    Gradients g(no_ce.params.store);
    b.collect(g);
    for (ParamId id : {no_ce.params.w_ce, no_ce.params.b_ce})
      for (double x : g[id].data()) ce_ok = ce_ok && x == 0.0;
  }

  // Shared mode: one encoder parameter set.
  const Model shared = model_with([](ModelConfig& m) { m.dual_encoder = false; }, 9);
  bool shared_ok = shared.params.enc_d.all() == shared.params.enc_t.all();
  for (const auto& n : shared.params.store.names()) shared_ok = shared_ok && n.rfind("enc_D.", 0) != 0;

  // Copy-initialised dual encoder equals shared mode bit for bit before any update.
  const Model dual = model_with([](ModelConfig&) {}, 9);
  bool copy_ok = dual.params.config.copy_init_description_encoder;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tape t1, t2;
    ParamBinding b1(t1, dual.params.store, false), b2(t2, shared.params.store, false);
    const auto f1 = forward_pair(b1, dual.params, batch.inputs[i], batch.descriptions_of(i), batch.pairs[i].label);
    const auto f2 = forward_pair(b2, shared.params, batch.inputs[i], batch.descriptions_of(i), batch.pairs[i].label);
    copy_ok = copy_ok && f1.similarities.value() == f2.similarities.value() && f1.l_u->value() == f2.l_u->value();
  }

  std::string detail = "variants:";
  for (const auto& row : rows) detail += " " + row.variant + "=" + fmt("%.3f", row.test.micro_f1);
  detail += std::string("; cls-off invariant ") + (cls_ok ? "yes" : "NO") + ", ce-off zero W_ce grad " +
            (ce_ok ? "yes" : "NO") + ", shared single set " + (shared_ok ? "yes" : "NO") + ", copy-init == shared " +
            (copy_ok ? "yes" : "NO");
  return {ran && cls_ok && ce_ok && shared_ok && copy_ok, detail};
}

// ---------------------------------------------------------------------------

Outcome alpha_sweep_protocol() {
  const fs::path out1 = fs::temp_directory_path() / "dualre_acc_sweep1";
  const fs::path out2 = fs::temp_directory_path() / "dualre_acc_sweep2";
  const fs::path cfg = fs::temp_directory_path() / "dualre_acc_small.yaml";
  std::vector<std::string> base = {"dualre", "sweep", "--config", cfg.string(), "--epochs", "2",
                                   "--alphas", "0.1,0.3,0.5,0.7"};
  std::ostringstream o, e;
  auto a1 = base, a2 = base;
  a1.insert(a1.end(), {"--out", out1.string()});
  a2.insert(a2.end(), {"--out", out2.string()});
  const int c1 = run_cli(a1, o, e);
  const int c2 = run_cli(a2, o, e);
  if (c1 != 0 || c2 != 0) return {false, "sweep exited " + std::to_string(c1) + "/" + std::to_string(c2) + ": " + e.str()};
  const std::string t1 = slurp(out1 / "sweep.txt");
  const std::string t2 = slurp(out2 / "sweep.txt");
  const auto j = nlohmann::json::parse(slurp(out1 / "sweep.json"));
  bool rows_ok = j.size() == 4;
  const double expect[] = {0.1, 0.3, 0.5, 0.7};
  for (std::size_t i = 0; rows_ok && i < 4; ++i) rows_ok = j[i]["alpha"].get<double>() == expect[i];
  const auto lines = std::count(t1.begin(), t1.end(), '\n');
  const bool ok = rows_ok && lines == 5 && t1 == t2 && slurp(out1 / "sweep.json") == slurp(out2 / "sweep.json");
  std::string table = t1;
  std::replace(table.begin(), table.end(), '\n', '|');
  fs::remove_all(out1);
  fs::remove_all(out2);
  return {ok, std::string("4 rows, repeat identical ") + (t1 == t2 ? "yes" : "NO") + "; " + table};
}

// ---------------------------------------------------------------------------

Outcome inference_invariances() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  const std::vector<std::function<double(double)>> transforms = {
      [](double x) { return 3.0 * x + 7.0; }, [](double x) { return std::exp(x); },
      [](double x) { return x * x * x; }, [](double x) { return std::atan(5.0 * x); },
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); }};
  std::size_t violations = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t r = 2 + rng() % 7;
    const std::size_t d = 2 + rng() % 10;
    auto rand_vec = [&] {
      std::vector<double> v(d);
      for (auto& x : v) x = unit(rng);
      return Tensor::vector(v);
    };
    const Tensor rt = rand_vec();
    std::vector<Tensor> rd;
    for (std::size_t j = 0; j < r; ++j) rd.push_back(rand_vec());
    const Prediction base = predict(rt, rd);

    Tensor rt_s = rt;
    const double c0 = pos(rng);
    for (auto& x : rt_s.data()) x *= c0;
    std::vector<Tensor> rd_s = rd;
    for (auto& v : rd_s) {
      const double c = pos(rng);
      for (auto& x : v.data()) x *= c;
    }
    if (predict(rt_s, rd_s).predicate != base.predicate) ++violations;

    const auto& f = transforms[trial % transforms.size()];
    std::vector<double> mapped;
    for (double s : base.similarities) mapped.push_back(f(s));
    if (predict(mapped).predicate != base.predicate) ++violations;

    // Exact ties: duplicate the best description at a random earlier or later slot.
    std::vector<double> tied = base.similarities;
    const std::size_t a = rng() % r, b = rng() % r;
    const double top = *std::max_element(tied.begin(), tied.end()) + 1.0;
    tied[a] = tied[b] = top;
    if (predict(tied).predicate != std::min(a, b)) ++violations;
    std::vector<Tensor> same(r, rd[0]);
    if (predict(rt, same).predicate != 0) ++violations;
  }
  return {violations == 0, std::to_string(trials) + " trials, " + std::to_string(violations) + " violations"};
}

// ---------------------------------------------------------------------------

Outcome structure_invariants() {
  std::mt19937_64 rng(4242);
  const PredicateSchema schema = synthetic_schema();
  const std::vector<std::string> types = {"Chemical", "Disease", "Gene"};
  const std::vector<std::string> words = {"aspirin", "fever", "blocks", "the", "of", "kinase", "TP53", "cures",
                                          "mild", "p-38", "alpha", ",", "(", "dose", "levels", "in"};
  REInstance lexicon;
  lexicon.id = "lex";
  lexicon.tokens = words;
  const Vocab vocab = build_vocab(std::vector<REInstance>{lexicon}, schema, 1);
  const std::vector<std::string> preds = {"TREATS", "CAUSES", "INHIBITS"};
  std::size_t cases = 0, violations = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (violations++ == 0) first = what;
  };

  // Pair-count law and gold coverage.
  for (int i = 0; i < 2500; ++i, ++cases) {
    const std::size_t n = rng() % 9;
    REInstance inst;
    inst.id = "p" + std::to_string(i);
    for (std::size_t m = 0; m < n; ++m) {
      inst.tokens.push_back(words[rng() % words.size()]);
      inst.mentions.push_back({m, m + 1, types[rng() % types.size()]});
    }
    if (inst.tokens.empty()) inst.tokens.push_back("the");
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t o = 0; o < n; ++o)
        if (s != o && rng() % 5 == 0) inst.relations.push_back({s, o, preds[rng() % preds.size()]});
    const auto pairs = generate_pairs(inst, 0, schema);
    if (pairs.size() != (n == 0 ? 0 : n * (n - 1))) fail("pair count for |E|=" + std::to_string(n));
    for (const auto& g : inst.relations) {
      const auto hits = std::count_if(pairs.begin(), pairs.end(), [&](const CandidatePair& p) {
        return p.subject == g.subject && p.object == g.object && schema.predicate(p.label) == g.predicate;
      });
      if (hits != 1) fail("gold pair not enumerated exactly once");
    }
    const auto labelled = std::count_if(pairs.begin(), pairs.end(), [](auto& p) { return p.label != 0; });
    if (static_cast<std::size_t>(labelled) != inst.relations.size()) fail("labelled count");
  }

  // Marker round trip.
  for (int i = 0; i < 2500; ++i, ++cases) {
    const std::size_t len = 2 + rng() % 12;
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < len; ++k) tokens.push_back(words[rng() % words.size()]);
    // Two disjoint non-empty spans in either order.
    std::size_t cut = 1 + rng() % (len - 1);
    std::size_t a0 = rng() % cut, a1 = a0 + 1 + rng() % (cut - a0);
    std::size_t b0 = cut + rng() % (len - cut), b1 = b0 + 1 + rng() % (len - b0);
    Mention first_m{a0, a1, types[rng() % 3]}, second_m{b0, b1, types[rng() % 3]};
    const bool swap = rng() % 2;
    const Mention& sub = swap ? second_m : first_m;
    const Mention& obj = swap ? first_m : second_m;
    const MarkedSequence m = mark_input(tokens, sub, obj, vocab, 512);
    std::vector<int> plain;
    auto ids_of = [&](std::size_t from, std::size_t to) {
      std::vector<int> out;
      for (std::size_t k = from; k < to; ++k)
        for (int id : tokenize(tokens[k], vocab)) out.push_back(id);
      return out;
    };
    plain = ids_of(0, len);
    if (strip_markers(m, vocab) != plain) fail("strip_markers round trip");
    const auto sub_ids = ids_of(sub.start, sub.end);
    const auto obj_ids = ids_of(obj.start, obj.end);
    auto span_at = [&](std::size_t pos, const std::vector<int>& ids, MarkerKind open, MarkerKind close,
                       const std::string& type) {
      if (m.ids.at(pos) != vocab.marker(open, type)) return false;
      for (std::size_t k = 0; k < ids.size(); ++k)
        if (m.ids.at(pos + 1 + k) != ids[k]) return false;
      return m.ids.at(pos + 1 + ids.size()) == vocab.marker(close, type);
    };
    if (!span_at(m.sub_start_pos, sub_ids, MarkerKind::SubjectStart, MarkerKind::SubjectEnd, sub.type))
      fail("subject span not recovered");
    if (!span_at(m.obj_start_pos, obj_ids, MarkerKind::ObjectStart, MarkerKind::ObjectEnd, obj.type))
      fail("object span not recovered");
    if (m.ids.front() != Vocab::cls_id() || m.ids.back() != Vocab::sep_id()) fail("missing [CLS]/[SEP]");
  }

  // Template placeholder validation.
  for (int i = 0; i < 2500; ++i, ++cases) {
    const std::size_t ns = rng() % 3, no = rng() % 3;
    std::vector<std::string> parts;
    for (std::size_t k = 0, n = 1 + rng() % 5; k < n; ++k) parts.push_back(words[rng() % words.size()]);
    for (std::size_t k = 0; k < ns; ++k) parts.push_back("@subject@");
    for (std::size_t k = 0; k < no; ++k) parts.push_back("@object@");
    if (rng() % 4 == 0) parts.push_back("@subj@");
    std::shuffle(parts.begin(), parts.end(), rng);
    std::string text;
    for (const auto& p : parts) text += (text.empty() ? "" : " ") + p;
    const auto v = schema_violations({"NULL", "R"}, {"T"}, {{"NULL", "none @subject@ @object@"}, {"R", text}});
    const bool valid = ns == 1 && no == 1;
    if (v.empty() != valid) fail("placeholder check on '" + text + "'");
  }

  // Counting identities.
  const std::vector<std::string> names = {"NULL", "A", "B", "C"};
  for (int i = 0; i < 2500; ++i, ++cases) {
    const std::size_t n = rng() % 40;
    std::vector<std::size_t> gold(n), pred(n);
    for (std::size_t k = 0; k < n; ++k) gold[k] = rng() % 4, pred[k] = rng() % 4;
    const EvalReport r = score_predictions(gold, pred, names);
    const auto gold_nn = static_cast<std::size_t>(std::count_if(gold.begin(), gold.end(), [](auto g) { return g; }));
    const auto pred_nn = static_cast<std::size_t>(std::count_if(pred.begin(), pred.end(), [](auto p) { return p; }));
    if (r.tp + r.fn != gold_nn || r.non_null_gold() != gold_nn) fail("TP + FN != non-NULL gold");
    if (r.tp + r.fp != pred_nn) fail("TP + FP != non-NULL predictions");
    const PRF prf = prf_from_counts(r.tp, r.fp, r.fn);
    if (prf.f1 != r.micro_f1) fail("micro F1 mismatch");
  }

  return {violations == 0, std::to_string(cases) + " cases, " + std::to_string(violations) + " violations" +
                               (first.empty() ? "" : " (first: " + first + ")")};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  const fs::path cfg = fs::temp_directory_path() / "dualre_acc_small.yaml";
  std::vector<fs::path> outs;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = fs::temp_directory_path() / ("dualre_acc_det" + std::to_string(run));
    fs::remove_all(out);
    std::ostringstream o, e;
    const int ct = run_cli({"dualre", "train", "--config", cfg.string(), "--out", out.string(), "--epochs", "2"}, o, e);
    const int ce = run_cli({"dualre", "eval", "--checkpoint", (out / "checkpoint").string(), "--data",
                            (kCorpus / "test.jsonl").string(), "--out", out.string()},
                           o, e);
    const int cp = run_cli({"dualre", "predict", "--checkpoint", (out / "checkpoint").string(), "--data",
                            (kCorpus / "test.jsonl").string(), "--out", out.string()},
                           o, e);
    if (ct || ce || cp) return {false, "run " + std::to_string(run) + " failed: " + e.str()};
    outs.push_back(out);
  }
  std::string detail;
  bool ok = true;
  for (const char* f : {"train_log.jsonl", "checkpoint", "eval_report.json", "eval_report.txt", "predictions.jsonl"}) {
    const std::string a = slurp(outs[0] / f), b = slurp(outs[1] / f);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : ", ") + f + (same ? " identical" : " DIFFERS") + " (" +
              std::to_string(a.size()) + " B)";
  }
  for (const auto& o : outs) fs::remove_all(o);
  return {ok, detail};
}

void write_small_config() {
  std::ofstream(fs::temp_directory_path() / "dualre_acc_small.yaml")
      << "data:\n"
      << "  schema: " << (kCorpus / "schema.yaml").string() << "\n"
      << "  train: " << (kCorpus / "train.jsonl").string() << "\n"
      << "  dev: " << (kCorpus / "dev.jsonl").string() << "\n"
      << "  test: " << (kCorpus / "test.jsonl").string() << "\n"
      << "seed: 13\n"
      << "encoder: {n_layers: 1, n_heads: 2, d_model: 16, d_ff: 32, max_len: 128, init_std: 0.02}\n"
      << "model: {d: 16}\n";
}

}  // namespace

int main() {
  write_small_config();
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "loss oracle equivalence", loss_oracle},
      {3, "synthetic separability", synthetic_separability},
      {4, "ablation mechanics", ablation_mechanics},
      {5, "alpha-sweep protocol", alpha_sweep_protocol},
      {6, "inference invariances", inference_invariances},
      {7, "data/structure invariants", structure_invariants},
      {8, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    const Outcome o = guarded(c.run);
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
