#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dualre {

// Token range [start, end) of one entity mention.
struct Mention {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string type;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct GoldRelation {
  std::size_t subject = 0;  // mention index
  std::size_t object = 0;   // mention index
  std::string predicate;

  friend bool operator==(const GoldRelation&, const GoldRelation&) = default;
};

/// One text with its mentions and gold relations.
struct REInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;
  std::vector<GoldRelation> relations;

  // Mention tokens joined by single spaces.
  std::string span_text(std::size_t mention) const;

  friend bool operator==(const REInstance&, const REInstance&) = default;
};

}  // namespace dualre
