#include "dualre/model.hpp"

#include <cmath>

#include "dualre/error.hpp"

namespace dualre {

void ModelConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
  if (d == 0) throw ContractError("projection width d must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"d", c.d},
       {"alpha", c.alpha},
       {"use_cls_concat", c.use_cls_concat},
       {"use_ce_loss", c.use_ce_loss},
       {"dual_encoder", c.dual_encoder},
       {"temperature", c.temperature},
       {"copy_init_description_encoder", c.copy_init_description_encoder}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.d = j.value("d", c.d);
  c.alpha = j.value("alpha", c.alpha);
  c.use_cls_concat = j.value("use_cls_concat", c.use_cls_concat);
  c.use_ce_loss = j.value("use_ce_loss", c.use_ce_loss);
  c.dual_encoder = j.value("dual_encoder", c.dual_encoder);
  c.temperature = j.value("temperature", c.temperature);
  c.copy_init_description_encoder = j.value("copy_init_description_encoder", c.copy_init_description_encoder);
}

ModelParams init_model(const EncoderConfig& encoder, const ModelConfig& config, std::size_t num_predicates,
                       std::uint64_t seed) {
  encoder.validate();
  config.validate();
  if (num_predicates == 0) throw ContractError("a model needs at least one predicate");
  ModelParams m;
  m.encoder = encoder;
  m.config = config;
  m.num_predicates = num_predicates;
  Rng rng(seed);
  m.enc_t = add_encoder_params(m.store, "enc_T", encoder, rng);
  if (!config.dual_encoder) {
    m.enc_d = m.enc_t;
  } else if (config.copy_init_description_encoder) {
    m.enc_d = copy_encoder_params(m.store, "enc_D", m.enc_t, encoder);
  } else {
    m.enc_d = add_encoder_params(m.store, "enc_D", encoder, rng);
  }
  const std::size_t dm = encoder.d_model;
  m.w_t = m.store.add("W_T", random_normal(Shape{2 * dm, config.d}, encoder.init_std, rng));
  m.w_d = m.store.add("W_D", random_normal(Shape{3 * dm, config.d}, encoder.init_std, rng));
  m.w_ce = m.store.add("W_ce", random_normal(Shape{config.d, num_predicates}, encoder.init_std, rng));
  m.b_ce = m.store.add("b_ce", Tensor(Shape{num_predicates}, 0.0));
  return m;
}

ModelParams bind_model(const EncoderConfig& encoder, const ModelConfig& config, std::size_t num_predicates,
                       ParamStore store) {
  encoder.validate();
  config.validate();
  ModelParams m;
  m.encoder = encoder;
  m.config = config;
  m.num_predicates = num_predicates;
  m.store = std::move(store);
  m.enc_t = find_encoder_params(m.store, "enc_T", encoder);
  m.enc_d = config.dual_encoder ? find_encoder_params(m.store, "enc_D", encoder) : m.enc_t;
  auto expect = [&](const char* name, Shape shape) {
    const ParamId id = m.store.id(name);
    if (m.store.value(id).shape() != shape)
      throw DimensionError(std::string("parameter ") + name + " has shape " + shape_str(m.store.value(id).shape()) +
                           ", expected " + shape_str(shape));
    return id;
  };
  const std::size_t dm = encoder.d_model;
  m.w_t = expect("W_T", Shape{2 * dm, config.d});
  m.w_d = expect("W_D", Shape{3 * dm, config.d});
  m.w_ce = expect("W_ce", Shape{config.d, num_predicates});
  m.b_ce = expect("b_ce", Shape{num_predicates});
  std::size_t expected = m.enc_t.all().size() + 4 + (config.dual_encoder ? m.enc_d.all().size() : 0);
  if (m.store.size() != expected) throw ContractError("checkpoint holds unexpected parameters");
  return m;
}

namespace {

void check_positions(const PaddedSequence& seq) {
  const std::size_t n = seq.ids.size();
  if (seq.sub_start_pos >= n || seq.obj_start_pos >= n || seq.sub_start_pos == seq.obj_start_pos)
    throw ContractError("marker positions (" + std::to_string(seq.sub_start_pos) + ", " +
                        std::to_string(seq.obj_start_pos) + ") invalid for a sequence of " + std::to_string(n));
  if (!seq.mask.empty() && (!seq.mask[seq.sub_start_pos] || !seq.mask[seq.obj_start_pos]))
    throw ContractError("marker position falls on padding");
}

Var project(ParamBinding& bind, ParamId w, Var features) {
  using namespace ops;
  const std::size_t width = features.value().size();
  Var row = reshape(features, Shape{1, width});
  Var out = matmul(row, bind(w));
  return reshape(out, Shape{out.value().size()});
}

}  // namespace

InputRepresentation rho_T(ParamBinding& bind, const ModelParams& params, const PaddedSequence& input) {
  using namespace ops;
  check_positions(input);
  Var h = encode(bind, params.enc_t, params.encoder, input.ids, input.mask);
  Var pair = concat({slice_row(h, input.sub_start_pos), slice_row(h, input.obj_start_pos)});
  return {project(bind, params.w_t, pair), slice_row(h, 0)};
}

Var rho_D(ParamBinding& bind, const ModelParams& params, const PaddedSequence& description, Var cls_from_input) {
  using namespace ops;
  check_positions(description);
  if (cls_from_input.value().shape() != Shape{params.encoder.d_model})
    throw DimensionError("rho_D: [CLS] vector has shape " + shape_str(cls_from_input.value().shape()));
  Var h = encode(bind, params.enc_d, params.encoder, description.ids, description.mask);
  Var cls = params.config.use_cls_concat ? cls_from_input
                                         : bind.tape().constant(Tensor(Shape{params.encoder.d_model}, 0.0));
  Var feats = concat({cls, slice_row(h, description.sub_start_pos), slice_row(h, description.obj_start_pos)});
  return project(bind, params.w_d, feats);
}

Var contrastive_loss_from_similarities(Var similarities, std::size_t gold, double temperature) {
  using namespace ops;
  const std::size_t n = similarities.value().size();
  if (gold >= n)
    throw ContractError("gold predicate " + std::to_string(gold) + " out of range for " + std::to_string(n));
  if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
  Var logits = temperature == 1.0 ? similarities : scale(similarities, 1.0 / temperature);
  return scale(pick(log_softmax(logits), gold), -1.0);
}

Var contrastive_loss(Var rho_t, std::span<const Var> rho_d_all, std::size_t gold, double temperature) {
  if (rho_d_all.empty()) throw ContractError("contrastive_loss: no predicate representations");
  std::vector<Var> sims;
  sims.reserve(rho_d_all.size());
  for (const Var& r : rho_d_all) sims.push_back(ops::cosine(rho_t, r));
  return contrastive_loss_from_similarities(ops::stack(sims), gold, temperature);
}

Var cross_entropy_from_logits(Var logits, std::size_t gold) {
  using namespace ops;
  const std::size_t n = logits.value().size();
  if (gold >= n)
    throw ContractError("gold predicate " + std::to_string(gold) + " out of range for " + std::to_string(n));
  return scale(pick(log_softmax(logits), gold), -1.0);
}

Var ce_loss(ParamBinding& bind, const ModelParams& params, Var rho_t, std::size_t gold) {
  Var logits = ops::add(project(bind, params.w_ce, rho_t), bind(params.b_ce));
  return cross_entropy_from_logits(logits, gold);
}

Var unified_loss(Var l_ce, Var l_ct, double alpha, bool use_ce) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  if (!use_ce) return l_ct;
  return ops::add(ops::scale(l_ce, alpha), ops::scale(l_ct, 1.0 - alpha));
}

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

Prediction predict(std::span<const double> similarities) {
  if (similarities.empty()) throw ContractError("predict: no similarities");
  return {argmax_lowest(similarities), std::vector<double>(similarities.begin(), similarities.end())};
}

Prediction predict(const Tensor& rho_t, std::span<const Tensor> rho_d_all) {
  Tape tape;
  Var t = tape.constant_ref(rho_t);
  std::vector<double> sims;
  for (const auto& r : rho_d_all) sims.push_back(ops::cosine(t, tape.constant_ref(r)).value().item());
  return predict(sims);
}

PairForward forward_pair(ParamBinding& bind, const ModelParams& params, const PaddedSequence& input,
                         std::span<const PaddedSequence> descriptions, std::optional<std::size_t> gold) {
  if (descriptions.size() != params.num_predicates)
    throw ContractError("forward_pair: " + std::to_string(descriptions.size()) + " descriptions for " +
                        std::to_string(params.num_predicates) + " predicates");
  PairForward f;
  f.input = rho_T(bind, params, input);
  // One [CLS] value per pair, shared by every description.
  f.rho_d.reserve(descriptions.size());
  for (const auto& d : descriptions) f.rho_d.push_back(rho_D(bind, params, d, f.input.cls));
  std::vector<Var> sims;
  sims.reserve(f.rho_d.size());
  for (const Var& r : f.rho_d) sims.push_back(ops::cosine(f.input.rho, r));
  f.similarities = ops::stack(sims);
  if (gold) {
    f.l_ct = contrastive_loss_from_similarities(f.similarities, *gold, params.config.temperature);
    f.l_ce = ce_loss(bind, params, f.input.rho, *gold);
    f.l_u = unified_loss(*f.l_ce, *f.l_ct, params.config.alpha, params.config.use_ce_loss);
  }
  return f;
}

Prediction predict_pair(const ModelParams& params, const PairSequences& sequences) {
  Tape tape;
  ParamBinding bind(tape, params.store, false);
  const PaddedSequence input = pad_sequence(sequences.input, sequences.input.ids.size());
  std::vector<PaddedSequence> descs;
  descs.reserve(sequences.descriptions.size());
  for (const auto& d : sequences.descriptions) descs.push_back(pad_sequence(d, d.ids.size()));
  auto f = forward_pair(bind, params, input, descs, std::nullopt);
  const Tensor& s = f.similarities.value();
  return predict(s.data());
}

}  // namespace dualre
