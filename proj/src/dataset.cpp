#include "dualre/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "dualre/error.hpp"
#include "dualre/params.hpp"

namespace dualre {

std::string REInstance::span_text(std::size_t mention) const {
  const Mention& m = mentions.at(mention);
  std::string out;
  for (std::size_t i = m.start; i < m.end && i < tokens.size(); ++i) {
    if (i > m.start) out += ' ';
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

nlohmann::json instance_to_json(const REInstance& inst) {
  nlohmann::json mentions = nlohmann::json::array();
  for (const auto& m : inst.mentions) mentions.push_back({m.start, m.end, m.type});
  nlohmann::json relations = nlohmann::json::array();
  for (const auto& r : inst.relations) relations.push_back({r.subject, r.object, r.predicate});
  return {{"id", inst.id}, {"tokens", inst.tokens}, {"mentions", mentions}, {"relations", relations}};
}

REInstance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("expected a JSON object");
  for (const char* key : {"id", "tokens", "mentions", "relations"})
    if (!j.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
  REInstance inst;
  if (!j["id"].is_string()) throw InputError("\"id\" must be a string");
  inst.id = j["id"].get<std::string>();
  if (!j["tokens"].is_array()) throw InputError("\"tokens\" must be a list of strings");
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw InputError("\"tokens\" must be a list of strings");
    inst.tokens.push_back(t.get<std::string>());
  }
  if (!j["mentions"].is_array()) throw InputError("\"mentions\" must be a list");
  for (const auto& m : j["mentions"]) {
    if (!m.is_array() || m.size() != 3 || !m[0].is_number_integer() || !m[1].is_number_integer() || !m[2].is_string())
      throw InputError("each mention must be [start, end, \"TYPE\"]");
    if (m[0].get<long long>() < 0 || m[1].get<long long>() < 0)
      throw InputError("mention offsets must be non-negative");
    inst.mentions.push_back({m[0].get<std::size_t>(), m[1].get<std::size_t>(), m[2].get<std::string>()});
  }
  if (!j["relations"].is_array()) throw InputError("\"relations\" must be a list");
  for (const auto& r : j["relations"]) {
    if (!r.is_array() || r.size() != 3 || !r[0].is_number_integer() || !r[1].is_number_integer() || !r[2].is_string())
      throw InputError("each relation must be [subj_idx, obj_idx, \"PREDICATE\"]");
    if (r[0].get<long long>() < 0 || r[1].get<long long>() < 0)
      throw InputError("relation mention indices must be non-negative");
    inst.relations.push_back({r[0].get<std::size_t>(), r[1].get<std::size_t>(), r[2].get<std::string>()});
  }
  return inst;
}

std::vector<std::string> instance_violations(const REInstance& inst, const PredicateSchema& schema) {
  std::vector<std::string> out;
  if (inst.id.empty()) out.push_back("empty id");
  if (inst.tokens.empty()) out.push_back("no tokens");
  for (std::size_t i = 0; i < inst.tokens.size(); ++i)
    if (split_words(inst.tokens[i]).empty()) out.push_back("token " + std::to_string(i) + " is blank");

  bool spans_ok = true;
  for (std::size_t i = 0; i < inst.mentions.size(); ++i) {
    const auto& m = inst.mentions[i];
    if (m.start >= m.end || m.end > inst.tokens.size()) {
      out.push_back("mention " + std::to_string(i) + " span [" + std::to_string(m.start) + ", " +
                    std::to_string(m.end) + ") out of range for " + std::to_string(inst.tokens.size()) + " tokens");
      spans_ok = false;
    }
    if (!schema.has_entity_type(m.type))
      out.push_back("mention " + std::to_string(i) + " has unknown entity type '" + m.type + "'");
  }
  if (spans_ok)
    for (std::size_t a = 0; a < inst.mentions.size(); ++a)
      for (std::size_t b = a + 1; b < inst.mentions.size(); ++b) {
        const auto& x = inst.mentions[a];
        const auto& y = inst.mentions[b];
        if (x.start < y.end && y.start < x.end)
          out.push_back("mentions " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
      }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < inst.relations.size(); ++i) {
    const auto& r = inst.relations[i];
    const std::string where = "relation " + std::to_string(i);
    if (r.subject >= inst.mentions.size() || r.object >= inst.mentions.size())
      out.push_back(where + " references a missing mention");
    if (r.subject == r.object) out.push_back(where + " relates a mention to itself");
    auto p = schema.predicate_index(r.predicate);
    if (!p)
      out.push_back(where + " has unknown predicate '" + r.predicate + "'");
    else if (*p == 0)
      out.push_back(where + " uses NULL, which is implicit for unlisted pairs");
    if (!seen.insert({r.subject, r.object}).second)
      out.push_back(where + " duplicates pair (" + std::to_string(r.subject) + ", " + std::to_string(r.object) +
                    "); one predicate per pair");
  }

  std::set<std::string> missing;
  for (const auto& s : inst.mentions)
    for (const auto& o : inst.mentions) {
      if (&s == &o || !schema.has_entity_type(s.type) || !schema.has_entity_type(o.type)) continue;
      for (std::size_t p = 0; p < schema.num_predicates(); ++p)
        if (!schema.resolve(p, s.type, o.type)) missing.insert(schema.predicate(p) + "|" + s.type + "|" + o.type);
    }
  for (const auto& key : missing) out.push_back("no description template resolves for " + key);
  return out;
}

DatasetScan scan_dataset(const std::filesystem::path& path, const PredicateSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  DatasetScan scan;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    REInstance inst;
    try {
      inst = instance_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      scan.violations.push_back(where + "malformed JSON (" + e.what() + ")");
      continue;
    } catch (const InputError& e) {
      scan.violations.push_back(where + e.what());
      continue;
    }
    auto problems = instance_violations(inst, schema);
    if (!inst.id.empty() && !ids.insert(inst.id).second) problems.push_back("duplicate instance id '" + inst.id + "'");
    for (auto& p : problems) scan.violations.push_back(where + p);
    if (problems.empty()) scan.instances.push_back(std::move(inst));
  }
  return scan;
}

std::vector<REInstance> parse_dataset(const std::filesystem::path& path, const PredicateSchema& schema) {
  auto scan = scan_dataset(path, schema);
  if (!scan.violations.empty()) throw ParseError(std::move(scan.violations));
  return std::move(scan.instances);
}

void write_dataset(const std::filesystem::path& path, std::span<const REInstance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
  if (!out) throw IoError("failed writing dataset " + path.string());
}

// ---------------------------------------------------------------------------
// Pairs

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<CandidatePair> generate_pairs(const REInstance& inst, std::size_t instance_index,
                                          const PredicateSchema& schema, const PairOptions& options) {
  std::vector<CandidatePair> all;
  const std::size_t n = inst.mentions.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < n; ++o) {
      if (s == o) continue;
      if (options.allowed_types && !options.allowed_types->count({inst.mentions[s].type, inst.mentions[o].type}))
        continue;
      CandidatePair p{inst.id, instance_index, s, o, 0};
      for (const auto& r : inst.relations)
        if (r.subject == s && r.object == o) p.label = schema.predicate_index(r.predicate).value_or(0);
      all.push_back(std::move(p));
    }
  if (!options.null_cap) return all;

  std::vector<std::size_t> nulls;
  std::size_t labelled = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].label == 0)
      nulls.push_back(i);
    else
      ++labelled;
  }
  const std::size_t keep = std::min(nulls.size(), *options.null_cap * labelled);
  Rng rng(options.seed);
  for (std::size_t i = 0; i < keep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, nulls.size() - 1);
    std::swap(nulls[i], nulls[pick(rng)]);
  }
  std::vector<bool> dropped(all.size(), false);
  for (std::size_t i = keep; i < nulls.size(); ++i) dropped[nulls[i]] = true;
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (!dropped[i]) out.push_back(std::move(all[i]));
  return out;
}

TypePairSet observed_type_pairs(std::span<const REInstance> corpus) {
  TypePairSet out;
  for (const auto& inst : corpus)
    for (const auto& r : inst.relations)
      if (r.subject < inst.mentions.size() && r.object < inst.mentions.size())
        out.insert({inst.mentions[r.subject].type, inst.mentions[r.object].type});
  return out;
}

// ---------------------------------------------------------------------------
// Sequences

PaddedSequence pad_sequence(const MarkedSequence& seq, std::size_t length) {
  if (length < seq.ids.size()) throw ContractError("pad_sequence: target length is shorter than the sequence");
  PaddedSequence out;
  out.ids = seq.ids;
  out.ids.resize(length, Vocab::pad_id());
  out.mask.assign(length, 0);
  std::fill(out.mask.begin(), out.mask.begin() + static_cast<std::ptrdiff_t>(seq.ids.size()), 1);
  out.sub_start_pos = seq.sub_start_pos;
  out.obj_start_pos = seq.obj_start_pos;
  return out;
}

PairSequences prepare_pair(const CandidatePair& pair, const REInstance& inst, const PredicateSchema& schema,
                           const Vocab& vocab, const SequenceLimits& limits) {
  if (pair.subject >= inst.mentions.size() || pair.object >= inst.mentions.size())
    throw ContractError("pair references a mention outside instance " + inst.id);
  const Mention& s = inst.mentions[pair.subject];
  const Mention& o = inst.mentions[pair.object];
  PairSequences out;
  out.input = mark_input(inst.tokens, s, o, vocab, limits.input_max_len);
  const std::string s_text = inst.span_text(pair.subject);
  const std::string o_text = inst.span_text(pair.object);
  out.descriptions.reserve(schema.num_predicates());
  for (std::size_t r = 0; r < schema.num_predicates(); ++r) {
    auto filled = fill_template(schema, r, s_text, o_text, s.type, o.type);
    out.descriptions.push_back(mark_description(filled, s.type, o.type, vocab, limits.description_max_len));
  }
  return out;
}

Batch make_batch(std::span<const CandidatePair> pairs, std::span<const REInstance> instances,
                 const PredicateSchema& schema, const Vocab& vocab, const SequenceLimits& limits) {
  std::vector<PairSequences> prepared;
  prepared.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.instance_index >= instances.size() || instances[p.instance_index].id != p.instance_id)
      throw ContractError("pair references unknown instance '" + p.instance_id + "'");
    const std::string who =
        "pair (" + p.instance_id + ", " + std::to_string(p.subject) + ", " + std::to_string(p.object) + "): ";
    try {
      prepared.push_back(prepare_pair(p, instances[p.instance_index], schema, vocab, limits));
    } catch (const SchemaError& e) {
      throw SchemaError({who + e.what()});
    } catch (const InputError& e) {
      throw InputError(who + e.what());
    }
  }
  std::size_t in_len = 0, desc_len = 0;
  for (const auto& ps : prepared) {
    in_len = std::max(in_len, ps.input.ids.size());
    for (const auto& d : ps.descriptions) desc_len = std::max(desc_len, d.ids.size());
  }
  Batch batch;
  batch.num_predicates = schema.num_predicates();
  batch.pairs.assign(pairs.begin(), pairs.end());
  for (const auto& ps : prepared) {
    batch.inputs.push_back(pad_sequence(ps.input, in_len));
    for (const auto& d : ps.descriptions) batch.descriptions.push_back(pad_sequence(d, desc_len));
  }
  return batch;
}

}  // namespace dualre
