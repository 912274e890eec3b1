#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dualre/autograd.hpp"
#include "dualre/dataset.hpp"
#include "dualre/encoder.hpp"
#include "dualre/params.hpp"
#include "dualre/schema.hpp"
#include "dualre/vocab.hpp"
#include "json.hpp"

namespace dualre {

struct ModelConfig {
  std::size_t d = 64;          // projection width shared by rho_T and rho_D
  double alpha = 0.5;          // weight of the cross-entropy term
  bool use_cls_concat = true;  // [CLS] of the input encoder inside rho_D
  bool use_ce_loss = true;     // false drops L_ce from the objective entirely
  bool dual_encoder = true;    // false: descriptions reuse the input encoder
  double temperature = 1.0;
  // Dual mode only: start the description encoder as a copy of the input
  // encoder rather than from an independent draw.
  bool copy_init_description_encoder = true;

  // Throws ContractError unless 0 <= alpha <= 1, temperature > 0, d > 0.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// All learnable arrays of the dual encoder. In shared mode enc_d aliases
/// enc_t and no "enc_D.*" arrays exist.
struct ModelParams {
  EncoderConfig encoder;
  ModelConfig config;
  std::size_t num_predicates = 0;

  ParamStore store;
  EncoderParams enc_t;
  EncoderParams enc_d;
  ParamId w_t = 0;   // [2 d_model x d]
  ParamId w_d = 0;   // [3 d_model x d]
  ParamId w_ce = 0;  // [d x |R|]
  ParamId b_ce = 0;  // [|R|]

  bool shared_encoder() const { return !config.dual_encoder; }
};

ModelParams init_model(const EncoderConfig& encoder, const ModelConfig& config, std::size_t num_predicates,
                       std::uint64_t seed);

// Rebuilds the id layout over loaded arrays, checking names and shapes.
ModelParams bind_model(const EncoderConfig& encoder, const ModelConfig& config, std::size_t num_predicates,
                       ParamStore store);

/// Everything needed to run the model on raw instances.
struct Model {
  ModelParams params;
  PredicateSchema schema;
  Vocab vocab;
  std::size_t description_max_len = 64;

  SequenceLimits limits() const { return {params.encoder.max_len, description_max_len}; }
};

struct InputRepresentation {
  Var rho;  // [d]
  Var cls;  // [d_model], E_T at [CLS]
};

// rho_T = W_T (E_T[SUB] || E_T[OBJ]).
InputRepresentation rho_T(ParamBinding& bind, const ModelParams& params, const PaddedSequence& input);

// rho_D^r = W_D (E_T[CLS] || E_D^r[SUB] || E_D^r[OBJ]). With use_cls_concat
// off, a zero vector takes the [CLS] slot so W_D keeps its shape.
Var rho_D(ParamBinding& bind, const ModelParams& params, const PaddedSequence& description, Var cls_from_input);

// -log softmax(sim / temperature)[gold], sim = cosine similarities.
Var contrastive_loss_from_similarities(Var similarities, std::size_t gold, double temperature);
Var contrastive_loss(Var rho_t, std::span<const Var> rho_d_all, std::size_t gold, double temperature);

// -log softmax(logits)[gold]
Var cross_entropy_from_logits(Var logits, std::size_t gold);
// Linear head W_ce rho_T + b_ce, then cross-entropy.
Var ce_loss(ParamBinding& bind, const ModelParams& params, Var rho_t, std::size_t gold);

// alpha * L_ce + (1 - alpha) * L_ct, or L_ct alone when use_ce is false.
Var unified_loss(Var l_ce, Var l_ct, double alpha, bool use_ce = true);

struct Prediction {
  std::size_t predicate = 0;
  std::vector<double> similarities;
};

// argmax over similarities; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);
Prediction predict(std::span<const double> similarities);
Prediction predict(const Tensor& rho_t, std::span<const Tensor> rho_d_all);

/// Graph of one candidate pair.
struct PairForward {
  InputRepresentation input;
  std::vector<Var> rho_d;  // indexed by predicate
  Var similarities;        // [|R|]
  // Present when a gold label was given.
  std::optional<Var> l_ce, l_ct, l_u;
};

PairForward forward_pair(ParamBinding& bind, const ModelParams& params, const PaddedSequence& input,
                         std::span<const PaddedSequence> descriptions, std::optional<std::size_t> gold);

// Inference without gradients over unpadded sequences.
Prediction predict_pair(const ModelParams& params, const PairSequences& sequences);

}  // namespace dualre
