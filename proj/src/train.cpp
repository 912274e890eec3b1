#include "dualre/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "dualre/error.hpp"
#include "dualre/kernels.hpp"

namespace dualre {

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("epochs must be at least 1");
  if (batch_size < 1) throw ContractError("batch size must be at least 1");
  if (threads < 0) throw ContractError("thread count must not be negative");
  adam.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.adam.learning_rate},
       {"beta1", c.adam.beta1},
       {"beta2", c.adam.beta2},
       {"eps", c.adam.eps},
       {"seed", c.seed},
       {"null_cap", c.null_cap ? nlohmann::json(*c.null_cap) : nlohmann::json(nullptr)},
       {"type_filter", c.type_filter},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("eps", c.adam.eps);
  c.seed = j.value("seed", c.seed);
  if (j.contains("null_cap")) {
    if (j.at("null_cap").is_null())
      c.null_cap.reset();
    else
      c.null_cap = j.at("null_cap").get<std::size_t>();
  }
  c.type_filter = j.value("type_filter", c.type_filter);
  c.threads = j.value("threads", c.threads);
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch},   {"mean_l_ce", mean_l_ce}, {"mean_l_ct", mean_l_ct}, {"mean_l_u", mean_l_u},
          {"dev_p", dev_p},   {"dev_r", dev_r},         {"dev_f1", dev_f1}};
}

Model make_model(const PredicateSchema& schema, const Vocab& vocab, EncoderConfig encoder, const ModelConfig& config,
                 std::uint64_t seed, std::size_t description_max_len) {
  encoder.vocab_size = vocab.size();
  Model m;
  m.params = init_model(encoder, config, schema.num_predicates(), mix_seed(seed, 0x1417));
  m.schema = schema;
  m.vocab = vocab;
  m.description_max_len = description_max_len;
  return m;
}

namespace {

std::string pair_label(const CandidatePair& p) {
  return "(" + p.instance_id + ", " + std::to_string(p.subject) + ", " + std::to_string(p.object) + ")";
}

std::vector<CandidatePair> epoch_pairs(std::span<const REInstance> corpus, const PredicateSchema& schema,
                                       const TrainConfig& cfg, const TypePairSet* allowed, std::size_t epoch) {
  std::vector<CandidatePair> pairs;
  const std::uint64_t epoch_seed = mix_seed(cfg.seed, epoch);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    PairOptions opt;
    opt.null_cap = cfg.null_cap;
    opt.seed = mix_seed(epoch_seed, i);
    opt.allowed_types = allowed;
    auto ps = generate_pairs(corpus[i], i, schema, opt);
    pairs.insert(pairs.end(), ps.begin(), ps.end());
  }
  Rng rng(mix_seed(epoch_seed, 0x5eed));
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

struct PairLoss {
  double l_ce = 0.0, l_ct = 0.0, l_u = 0.0;
};

}  // namespace

TrainResult train(const TrainData& data, const EncoderConfig& encoder, const ModelConfig& config,
                  const TrainConfig& train_config, const std::function<void(const EpochLog&)>& on_epoch) {
  if (!data.schema || !data.vocab) throw ContractError("train: schema and vocabulary are required");
  EncoderConfig enc = encoder;
  enc.vocab_size = data.vocab->size();
  enc.validate();
  config.validate();
  train_config.validate();
  return train_from(make_model(*data.schema, *data.vocab, enc, config, train_config.seed), data, train_config,
                    on_epoch);
}

TrainResult train_from(Model model, const TrainData& data, const TrainConfig& cfg,
                       const std::function<void(const EpochLog&)>& on_epoch) {
  if (!data.schema || !data.vocab) throw ContractError("train: schema and vocabulary are required");
  cfg.validate();
  model.params.config.validate();
  if (data.train.empty()) throw ContractError("train: empty training set");
  if (cfg.threads > 0) kernels::set_num_threads(cfg.threads);

  const PredicateSchema& schema = *data.schema;
  const Vocab& vocab = *data.vocab;
  const TypePairSet observed = observed_type_pairs(data.train);
  const TypePairSet* allowed = cfg.type_filter ? &observed : nullptr;
  EvalOptions eval_opt{allowed};

  Adam adam(model.params.store, cfg.adam);
  Gradients total(model.params.store);
  std::vector<Gradients> slots(cfg.batch_size, Gradients(model.params.store));

  TrainResult result;
  ParamStore best_store = model.params.store;
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto pairs = epoch_pairs(data.train, schema, cfg, allowed, epoch);
    if (pairs.empty()) throw TrainingError("epoch " + std::to_string(epoch) + ": no candidate pairs");
    double sum_ce = 0.0, sum_ct = 0.0, sum_u = 0.0;
    std::size_t num_batches = 0;

    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, pairs.size() - start);
      const std::span<const CandidatePair> chunk(pairs.data() + start, b);
      const Batch batch = make_batch(chunk, data.train, schema, vocab, model.limits());

      std::vector<PairLoss> losses(b);
      std::vector<std::exception_ptr> errors(b);
      const ModelParams& params = model.params;
#pragma omp parallel for schedule(dynamic, 1)
      for (std::size_t i = 0; i < b; ++i) {
        try {
          slots[i].zero();
          Tape tape;
          ParamBinding bind(tape, params.store, true);
          auto f = forward_pair(bind, params, batch.inputs[i], batch.descriptions_of(i), batch.pairs[i].label);
          losses[i] = {f.l_ce->value().item(), f.l_ct->value().item(), f.l_u->value().item()};
          if (!std::isfinite(losses[i].l_u) || !std::isfinite(losses[i].l_ce) || !std::isfinite(losses[i].l_ct))
            continue;
          tape.backward(*f.l_u);
          bind.collect(slots[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      for (std::size_t i = 0; i < b; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);

      auto batch_ids = [&] {
        std::string ids;
        for (const auto& p : batch.pairs) ids += (ids.empty() ? "" : ", ") + pair_label(p);
        return ids;
      };
      double ce = 0.0, ct = 0.0, u = 0.0;
      for (const auto& l : losses) {
        if (!std::isfinite(l.l_u) || !std::isfinite(l.l_ce) || !std::isfinite(l.l_ct))
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(num_batches) + " [" + batch_ids() + "]");
        ce += l.l_ce;
        ct += l.l_ct;
        u += l.l_u;
      }
      total.zero();
      const double inv = 1.0 / static_cast<double>(b);
      for (std::size_t i = 0; i < b; ++i) total.accumulate(slots[i], inv);
      if (!total.all_finite())
        throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(num_batches) + " [" + batch_ids() + "]");
      adam.step(model.params.store, total);

      sum_ce += ce * inv;
      sum_ct += ct * inv;
      sum_u += u * inv;
      ++num_batches;
    }

    EpochLog log;
    log.epoch = epoch;
    const double nb = static_cast<double>(num_batches);
    log.mean_l_ce = sum_ce / nb;
    log.mean_l_ct = sum_ct / nb;
    log.mean_l_u = sum_u / nb;
    if (!data.dev.empty()) {
      const EvalReport dev = evaluate(model, data.dev, eval_opt);
      log.dev_p = dev.micro_precision;
      log.dev_r = dev.micro_recall;
      log.dev_f1 = dev.micro_f1;
    }
    const bool better = data.dev.empty() ? true : log.dev_f1 > best_f1;
    if (better) {
      best_f1 = log.dev_f1;
      best_store = model.params.store;
      result.best_epoch = epoch;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  model.params.store = std::move(best_store);
  result.model = std::move(model);
  return result;
}

nlohmann::json prediction_to_json(const PairPrediction& p, const REInstance& inst, const PredicateSchema& schema) {
  nlohmann::json j = {{"instance_id", p.pair.instance_id},
                      {"subject", p.pair.subject},
                      {"object", p.pair.object},
                      {"subject_text", inst.span_text(p.pair.subject)},
                      {"object_text", inst.span_text(p.pair.object)},
                      {"gold", schema.predicate(p.pair.label)},
                      {"predicted", schema.predicate(p.predicted)}};
  if (p.similarities.empty()) {
    j["similarities"] = nullptr;
    j["type_filtered"] = true;
  } else {
    j["similarities"] = p.similarities;
  }
  return j;
}

std::vector<PairPrediction> predict_dataset(const Model& model, std::span<const REInstance> data,
                                            const EvalOptions& options) {
  std::vector<PairPrediction> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (auto& p : generate_pairs(data[i], i, model.schema)) out.push_back({std::move(p), 0, {}});

  const SequenceLimits limits = model.limits();
  std::vector<std::exception_ptr> errors(out.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t k = 0; k < out.size(); ++k) {
    try {
      PairPrediction& pp = out[k];
      const REInstance& inst = data[pp.pair.instance_index];
      if (options.allowed_types &&
          !options.allowed_types->count({inst.mentions[pp.pair.subject].type, inst.mentions[pp.pair.object].type}))
        continue;
      const PairSequences seqs = prepare_pair(pp.pair, inst, model.schema, model.vocab, limits);
      Prediction pred = predict_pair(model.params, seqs);
      pp.predicted = pred.predicate;
      pp.similarities = std::move(pred.similarities);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw InputError("pair " + pair_label(out[k].pair) + ": " + e.what());
    }
  }
  return out;
}

EvalReport report_from_predictions(std::span<const PairPrediction> predictions, const PredicateSchema& schema) {
  std::vector<std::size_t> gold, pred;
  gold.reserve(predictions.size());
  pred.reserve(predictions.size());
  for (const auto& p : predictions) {
    gold.push_back(p.pair.label);
    pred.push_back(p.predicted);
  }
  return score_predictions(gold, pred, schema.predicates());
}

EvalReport evaluate(const Model& model, std::span<const REInstance> data, const EvalOptions& options) {
  return report_from_predictions(predict_dataset(model, data, options), model.schema);
}

std::vector<SweepRow> alpha_sweep(const TrainData& data, const EncoderConfig& encoder, const ModelConfig& config,
                                  const TrainConfig& train_config, std::span<const double> alphas) {
  if (alphas.empty()) throw ContractError("alpha_sweep: no alpha values");
  std::vector<double> sorted(alphas.begin(), alphas.end());
  std::sort(sorted.begin(), sorted.end());
  for (double a : sorted)
    if (!(a >= 0.0 && a <= 1.0)) throw ContractError("alpha_sweep: alpha " + std::to_string(a) + " outside [0, 1]");
  std::vector<SweepRow> rows;
  for (double a : sorted) {
    ModelConfig c = config;
    c.alpha = a;
    try {
      const TrainResult r = train(data, encoder, c, train_config);
      const EpochLog& best = r.log.at(r.best_epoch - 1);
      rows.push_back({a, best.dev_p, best.dev_r, best.dev_f1});
    } catch (const TrainingError& e) {
      throw TrainingError("alpha " + std::to_string(a) + ": " + e.what());
    }
  }
  return rows;
}

std::string format_sweep_table(std::span<const SweepRow> rows) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s\n", "alpha", "P", "R", "F1");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-6.2f %8.2f %8.2f %8.2f\n", r.alpha, 100.0 * r.precision, 100.0 * r.recall,
                  100.0 * r.f1);
    os << buf;
  }
  return os.str();
}

nlohmann::json sweep_to_json(std::span<const SweepRow> rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back({{"alpha", r.alpha}, {"p", r.precision}, {"r", r.recall}, {"f1", r.f1}});
  return j;
}

std::vector<AblationVariant> ablation_variants(const ModelConfig& base) {
  ModelConfig full = base;
  full.use_cls_concat = true;
  full.use_ce_loss = true;
  full.dual_encoder = true;
  std::vector<AblationVariant> v;
  v.push_back({"full", full});
  v.push_back({"no_cls_concat", full});
  v.back().config.use_cls_concat = false;
  v.push_back({"no_ce_loss", full});
  v.back().config.use_ce_loss = false;
  v.push_back({"shared_encoder", full});
  v.back().config.dual_encoder = false;
  return v;
}

std::vector<AblationRow> ablate(const TrainData& data, std::span<const REInstance> test, const EncoderConfig& encoder,
                                const ModelConfig& base, const TrainConfig& train_config) {
  std::vector<AblationRow> rows;
  for (const auto& v : ablation_variants(base)) {
    TrainResult r;
    try {
      r = train(data, encoder, v.config, train_config);
    } catch (const TrainingError& e) {
      throw TrainingError("variant " + v.name + ": " + e.what());
    }
    const TypePairSet observed = observed_type_pairs(data.train);
    EvalOptions opt{train_config.type_filter ? &observed : nullptr};
    rows.push_back({v.name, v.config, evaluate(r.model, test, opt), r.best_epoch});
  }
  return rows;
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s\n", "variant", "P", "R", "F1");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %8.2f %8.2f %8.2f\n", r.variant.c_str(), 100.0 * r.test.micro_precision,
                  100.0 * r.test.micro_recall, 100.0 * r.test.micro_f1);
    os << buf;
  }
  return os.str();
}

nlohmann::json ablation_to_json(std::span<const AblationRow> rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"variant", r.variant},
                 {"config", r.config},
                 {"best_epoch", r.best_epoch},
                 {"test_p", r.test.micro_precision},
                 {"test_r", r.test.micro_recall},
                 {"test_f1", r.test.micro_f1}});
  return j;
}

}  // namespace dualre
