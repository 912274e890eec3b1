#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dualre/instance.hpp"
#include "dualre/schema.hpp"

namespace dualre {

/// Cue-word corpus: each text holds "A <cue> B" plus optional filler and a
/// third mention. The cue alone fixes the predicate of (A, B); every other
/// ordered pair is NULL.
struct CueClass {
  std::string predicate;
  std::vector<std::string> cues;
  std::vector<std::pair<std::string, std::string>> type_pairs;  // (subject, object)
};

const std::vector<CueClass>& synthetic_cue_classes();

// NULL, TREATS, CAUSES, INHIBITS over Chemical, Disease, Gene.
PredicateSchema synthetic_schema();

std::vector<REInstance> make_synthetic(std::size_t count, std::uint64_t seed, const std::string& id_prefix);

struct SyntheticSizes {
  std::size_t train = 200;
  std::size_t dev = 60;
  std::size_t test = 60;
};

// Writes schema.yaml, train.jsonl, dev.jsonl, test.jsonl and config.yaml.
void write_synthetic_corpus(const std::filesystem::path& dir, std::uint64_t seed, const SyntheticSizes& sizes = {});

}  // namespace dualre
