#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dualre {

inline constexpr std::string_view kNullPredicate = "NULL";
inline constexpr std::string_view kSubjectSlot = "@subject@";
inline constexpr std::string_view kObjectSlot = "@object@";

/// Predicate set R (NULL at index 0), entity types, and description
/// templates keyed "PREDICATE|SUBJTYPE|OBJTYPE" with a "PREDICATE" fallback.
class PredicateSchema {
 public:
  PredicateSchema() = default;

  // Validates every invariant and throws SchemaError listing all violations.
  static PredicateSchema create(std::vector<std::string> predicates, std::vector<std::string> entity_types,
                                std::map<std::string, std::string> templates);
  static PredicateSchema from_yaml(const std::string& text);
  static PredicateSchema load(const std::filesystem::path& path);

  std::string to_yaml() const;
  nlohmann::json to_json() const;
  static PredicateSchema from_json(const nlohmann::json& j);

  const std::vector<std::string>& predicates() const { return predicates_; }
  std::size_t num_predicates() const { return predicates_.size(); }
  const std::string& predicate(std::size_t index) const { return predicates_.at(index); }
  std::optional<std::size_t> predicate_index(std::string_view name) const;

  const std::vector<std::string>& entity_types() const { return entity_types_; }
  bool has_entity_type(std::string_view type) const;

  const std::map<std::string, std::string>& templates() const { return templates_; }
  // Typed key first, then the predicate-only fallback; nullptr if neither exists.
  const std::string* resolve(std::size_t predicate, std::string_view subject_type,
                             std::string_view object_type) const;

  friend bool operator==(const PredicateSchema&, const PredicateSchema&) = default;

 private:
  std::vector<std::string> predicates_;
  std::vector<std::string> entity_types_;
  std::map<std::string, std::string> templates_;
};

// Every violation of the schema invariants; empty when valid.
std::vector<std::string> schema_violations(const std::vector<std::string>& predicates,
                                           const std::vector<std::string>& entity_types,
                                           const std::map<std::string, std::string>& templates);

struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharRange&, const CharRange&) = default;
};

/// A template with its slots filled; the spans' character offsets travel
/// with the text so marking never searches for them.
struct FilledDescription {
  std::string text;
  CharRange subject;
  CharRange object;
};

// Replaces both slots verbatim. Throws SchemaError naming the
// (predicate, types) triple when no template resolves.
FilledDescription fill_template(const PredicateSchema& schema, std::size_t predicate, std::string_view subject_span,
                                std::string_view object_span, std::string_view subject_type,
                                std::string_view object_type);

}  // namespace dualre
