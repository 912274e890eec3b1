#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualre/autograd.hpp"
#include "dualre/params.hpp"
#include "json.hpp"

namespace dualre {

struct EncoderConfig {
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::size_t max_len = 128;
  std::size_t vocab_size = 0;
  double init_std = 0.02;

  // Throws ContractError on d_model % n_heads != 0, max_len < 8, zero widths.
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

struct EncoderLayerParams {
  ParamId ln1_gain, ln1_bias;
  ParamId wq, bq, wk, bk, wv, bv, wo, bo;
  ParamId ln2_gain, ln2_bias;
  ParamId w1, b1, w2, b2;
};

/// Ids of one encoder's arrays inside a ParamStore.
struct EncoderParams {
  std::string prefix;
  ParamId tok_emb = 0;  // [vocab_size x d_model]
  ParamId pos_emb = 0;  // [max_len x d_model]
  std::vector<EncoderLayerParams> layers;
  ParamId lnf_gain = 0, lnf_bias = 0;

  std::vector<ParamId> all() const;
};

// Registers "<prefix>.tok_emb", "<prefix>.layer0.attn.Wq", ... Weights and
// embeddings are N(0, init_std^2), biases 0, layer-norm gains 1.
EncoderParams add_encoder_params(ParamStore& store, const std::string& prefix, const EncoderConfig& config, Rng& rng);

// Registers a second encoder under `prefix` whose initial values copy `source`.
EncoderParams copy_encoder_params(ParamStore& store, const std::string& prefix, const EncoderParams& source,
                                  const EncoderConfig& config);

// Looks up an encoder's ids by prefix (used after loading a checkpoint).
EncoderParams find_encoder_params(const ParamStore& store, const std::string& prefix, const EncoderConfig& config);

/// Optional per-layer, per-head attention probabilities from a forward pass.
struct EncodeTrace {
  std::vector<Tensor> attention;  // layer-major, then head
};

// Token + positional embeddings through n_layers pre-norm blocks
// (x += attn(ln1(x)); x += ff(ln2(x))) and a final layer norm. Row i of the
// [len x d_model] output is token i in context. key_mask, when non-empty,
// excludes padded keys. Sequences longer than max_len are rejected.
Var encode(ParamBinding& bind, const EncoderParams& params, const EncoderConfig& config, std::span<const int> ids,
           std::span<const std::uint8_t> key_mask = {}, EncodeTrace* trace = nullptr);

// Inference convenience: a private tape, plain result.
Tensor encode(const ParamStore& store, const EncoderParams& params, const EncoderConfig& config,
              std::span<const int> ids, std::span<const std::uint8_t> key_mask = {}, EncodeTrace* trace = nullptr);

}  // namespace dualre
