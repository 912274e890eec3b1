#include "dualre/encoder.hpp"

#include <cmath>

#include "dualre/error.hpp"

namespace dualre {

void EncoderConfig::validate() const {
  if (n_heads == 0 || d_model == 0 || d_ff == 0) throw ContractError("encoder widths must be positive");
  if (d_model % n_heads != 0)
    throw ContractError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                        std::to_string(n_heads));
  if (max_len < 8) throw ContractError("max_len must be at least 8, got " + std::to_string(max_len));
  if (vocab_size == 0) throw ContractError("vocab_size must be positive");
  if (!(init_std > 0.0)) throw ContractError("init_std must be positive");
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"n_layers", c.n_layers}, {"n_heads", c.n_heads},       {"d_model", c.d_model}, {"d_ff", c.d_ff},
       {"max_len", c.max_len},   {"vocab_size", c.vocab_size}, {"init_std", c.init_std}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_model = j.value("d_model", c.d_model);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_len = j.value("max_len", c.max_len);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.init_std = j.value("init_std", c.init_std);
}

std::vector<ParamId> EncoderParams::all() const {
  std::vector<ParamId> ids{tok_emb, pos_emb};
  for (const auto& l : layers)
    ids.insert(ids.end(), {l.ln1_gain, l.ln1_bias, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo, l.bo, l.ln2_gain,
                           l.ln2_bias, l.w1, l.b1, l.w2, l.b2});
  ids.push_back(lnf_gain);
  ids.push_back(lnf_bias);
  return ids;
}

namespace {

// Walks the fixed naming scheme; `make` returns the id for (name, shape, kind).
enum class Init { Normal, Zero, One };

template <typename Make>
EncoderParams layout(const std::string& prefix, const EncoderConfig& c, Make&& make) {
  const std::size_t d = c.d_model;
  EncoderParams p;
  p.prefix = prefix;
  p.tok_emb = make(prefix + ".tok_emb", Shape{c.vocab_size, d}, Init::Normal);
  p.pos_emb = make(prefix + ".pos_emb", Shape{c.max_len, d}, Init::Normal);
  for (std::size_t i = 0; i < c.n_layers; ++i) {
    const std::string l = prefix + ".layer" + std::to_string(i);
    EncoderLayerParams lp{};
    lp.ln1_gain = make(l + ".ln1.gain", Shape{d}, Init::One);
    lp.ln1_bias = make(l + ".ln1.bias", Shape{d}, Init::Zero);
    lp.wq = make(l + ".attn.Wq", Shape{d, d}, Init::Normal);
    lp.bq = make(l + ".attn.bq", Shape{d}, Init::Zero);
    lp.wk = make(l + ".attn.Wk", Shape{d, d}, Init::Normal);
    lp.bk = make(l + ".attn.bk", Shape{d}, Init::Zero);
    lp.wv = make(l + ".attn.Wv", Shape{d, d}, Init::Normal);
    lp.bv = make(l + ".attn.bv", Shape{d}, Init::Zero);
    lp.wo = make(l + ".attn.Wo", Shape{d, d}, Init::Normal);
    lp.bo = make(l + ".attn.bo", Shape{d}, Init::Zero);
    lp.ln2_gain = make(l + ".ln2.gain", Shape{d}, Init::One);
    lp.ln2_bias = make(l + ".ln2.bias", Shape{d}, Init::Zero);
    lp.w1 = make(l + ".ff.W1", Shape{d, c.d_ff}, Init::Normal);
    lp.b1 = make(l + ".ff.b1", Shape{c.d_ff}, Init::Zero);
    lp.w2 = make(l + ".ff.W2", Shape{c.d_ff, d}, Init::Normal);
    lp.b2 = make(l + ".ff.b2", Shape{d}, Init::Zero);
    p.layers.push_back(lp);
  }
  p.lnf_gain = make(prefix + ".ln_f.gain", Shape{d}, Init::One);
  p.lnf_bias = make(prefix + ".ln_f.bias", Shape{d}, Init::Zero);
  return p;
}

}  // namespace

EncoderParams add_encoder_params(ParamStore& store, const std::string& prefix, const EncoderConfig& config, Rng& rng) {
  config.validate();
  return layout(prefix, config, [&](const std::string& name, Shape shape, Init init) {
    switch (init) {
      case Init::Normal: return store.add(name, random_normal(std::move(shape), config.init_std, rng));
      case Init::Zero: return store.add(name, Tensor(std::move(shape), 0.0));
      case Init::One: break;
    }
    return store.add(name, Tensor(std::move(shape), 1.0));
  });
}

EncoderParams copy_encoder_params(ParamStore& store, const std::string& prefix, const EncoderParams& source,
                                  const EncoderConfig& config) {
  return layout(prefix, config, [&](const std::string& name, const Shape&, Init) {
    Tensor v = store.value(store.id(source.prefix + name.substr(prefix.size())));
    return store.add(name, std::move(v));
  });
}

EncoderParams find_encoder_params(const ParamStore& store, const std::string& prefix, const EncoderConfig& config) {
  return layout(prefix, config, [&](const std::string& name, const Shape& shape, Init) {
    const ParamId id = store.id(name);
    if (store.value(id).shape() != shape)
      throw DimensionError("parameter " + name + " has shape " + shape_str(store.value(id).shape()) + ", expected " +
                           shape_str(shape));
    return id;
  });
}

Var encode(ParamBinding& bind, const EncoderParams& p, const EncoderConfig& c, std::span<const int> ids,
           std::span<const std::uint8_t> key_mask, EncodeTrace* trace) {
  using namespace ops;
  if (ids.empty()) throw InputError("encode: empty sequence");
  if (ids.size() > c.max_len)
    throw InputError("encode: sequence of length " + std::to_string(ids.size()) + " exceeds max_len " +
                     std::to_string(c.max_len));
  if (!key_mask.empty() && key_mask.size() != ids.size())
    throw DimensionError("encode: mask length " + std::to_string(key_mask.size()) + " for " +
                         std::to_string(ids.size()) + " tokens");
  const std::size_t n = ids.size();
  const std::size_t dh = c.d_model / c.n_heads;

  std::vector<int> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i);
  Var x = add(gather_rows(bind(p.tok_emb), ids), gather_rows(bind(p.pos_emb), positions));

  for (const auto& l : p.layers) {
    Var h = layer_norm(x, bind(l.ln1_gain), bind(l.ln1_bias));
    Var q = add(matmul(h, bind(l.wq)), bind(l.bq));
    Var k = add(matmul(h, bind(l.wk)), bind(l.bk));
    Var v = add(matmul(h, bind(l.wv)), bind(l.bv));
    std::vector<Var> heads;
    heads.reserve(c.n_heads);
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      const std::size_t b = hd * dh, e = b + dh;
      Var qh = c.n_heads == 1 ? q : slice_cols(q, b, e);
      Var kh = c.n_heads == 1 ? k : slice_cols(k, b, e);
      Var vh = c.n_heads == 1 ? v : slice_cols(v, b, e);
      if (trace) trace->attention.push_back(attention_probs(qh.value(), kh.value(), key_mask));
      heads.push_back(attention(qh, kh, vh, key_mask));
    }
    Var att = c.n_heads == 1 ? heads.front() : concat(std::span<const Var>(heads));
    x = add(x, add(matmul(att, bind(l.wo)), bind(l.bo)));

    Var h2 = layer_norm(x, bind(l.ln2_gain), bind(l.ln2_bias));
    Var ff = add(matmul(gelu(add(matmul(h2, bind(l.w1)), bind(l.b1))), bind(l.w2)), bind(l.b2));
    x = add(x, ff);
  }
  return layer_norm(x, bind(p.lnf_gain), bind(p.lnf_bias));
}

Tensor encode(const ParamStore& store, const EncoderParams& params, const EncoderConfig& config,
              std::span<const int> ids, std::span<const std::uint8_t> key_mask, EncodeTrace* trace) {
  Tape tape;
  ParamBinding bind(tape, store, false);
  return encode(bind, params, config, ids, key_mask, trace).value();
}

}  // namespace dualre
