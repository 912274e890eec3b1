#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dualre/instance.hpp"
#include "dualre/marking.hpp"
#include "dualre/schema.hpp"
#include "dualre/vocab.hpp"
#include "json.hpp"

namespace dualre {

// ---------------------------------------------------------------------------
// JSONL datasets: {"id": str, "tokens": [str], "mentions": [[start, end, "TYPE"]],
//                  "relations": [[subj_idx, obj_idx, "PREDICATE"]]}

struct DatasetScan {
  std::vector<REInstance> instances;    // lines that passed every check
  std::vector<std::string> violations;  // "path:line: message"
};

// Reads every line and collects all violations. Throws IoError when the
// file cannot be opened.
DatasetScan scan_dataset(const std::filesystem::path& path, const PredicateSchema& schema);

// scan_dataset that throws ParseError listing every violation.
std::vector<REInstance> parse_dataset(const std::filesystem::path& path, const PredicateSchema& schema);

// Semantic checks for one instance: spans, overlaps, types, predicates,
// duplicate pairs, template coverage for every mention type pair.
std::vector<std::string> instance_violations(const REInstance& inst, const PredicateSchema& schema);

nlohmann::json instance_to_json(const REInstance& inst);
// Structural decoding; throws InputError on a malformed object.
REInstance instance_from_json(const nlohmann::json& j);
void write_dataset(const std::filesystem::path& path, std::span<const REInstance> instances);

// ---------------------------------------------------------------------------
// Candidate pairs

struct CandidatePair {
  std::string instance_id;
  std::size_t instance_index = 0;
  std::size_t subject = 0;  // mention index
  std::size_t object = 0;   // mention index
  std::size_t label = 0;    // predicate index; 0 is NULL

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

using TypePairSet = std::set<std::pair<std::string, std::string>>;

struct PairOptions {
  // Training only: keep at most null_cap * (#labelled pairs) NULL pairs.
  std::optional<std::size_t> null_cap;
  std::uint64_t seed = 0;
  // Opt-in: drop pairs whose (subject type, object type) is not listed.
  const TypePairSet* allowed_types = nullptr;
};

// Every ordered pair of distinct mentions in enumeration order (subject
// major). Gold pairs carry their predicate, the rest NULL.
std::vector<CandidatePair> generate_pairs(const REInstance& inst, std::size_t instance_index,
                                          const PredicateSchema& schema, const PairOptions& options = {});

// Type pairs of the gold relations in a corpus.
TypePairSet observed_type_pairs(std::span<const REInstance> corpus);

// Deterministic per-(seed, stream) seed mixing.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Model-ready sequences

struct SequenceLimits {
  std::size_t input_max_len = 128;
  std::size_t description_max_len = 64;
};

/// Ids padded with [PAD]; mask is 1 for real tokens, 0 for padding.
struct PaddedSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;
  std::size_t sub_start_pos = 0;
  std::size_t obj_start_pos = 0;
};

PaddedSequence pad_sequence(const MarkedSequence& seq, std::size_t length);

/// Marked input plus one marked, instance-filled description per predicate.
struct PairSequences {
  MarkedSequence input;
  std::vector<MarkedSequence> descriptions;  // indexed by predicate
};

PairSequences prepare_pair(const CandidatePair& pair, const REInstance& inst, const PredicateSchema& schema,
                           const Vocab& vocab, const SequenceLimits& limits);

struct Batch {
  std::vector<CandidatePair> pairs;
  std::vector<PaddedSequence> inputs;        // B, padded to the longest input
  std::vector<PaddedSequence> descriptions;  // B * |R|, pair-major, padded to the longest description
  std::size_t num_predicates = 0;

  std::size_t size() const { return pairs.size(); }
  std::span<const PaddedSequence> descriptions_of(std::size_t b) const {
    return std::span<const PaddedSequence>(descriptions).subspan(b * num_predicates, num_predicates);
  }
};

// Errors from marking or template lookup are rethrown with the pair's identity.
Batch make_batch(std::span<const CandidatePair> pairs, std::span<const REInstance> instances,
                 const PredicateSchema& schema, const Vocab& vocab, const SequenceLimits& limits);

}  // namespace dualre
