#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualre/instance.hpp"
#include "dualre/schema.hpp"

namespace dualre {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

enum class MarkerKind { SubjectStart, SubjectEnd, ObjectStart, ObjectEnd };

// "[SUB:t]", "[/SUB:t]", "[OBJ:t]", "[/OBJ:t]".
std::string marker_token(MarkerKind kind, std::string_view entity_type);

/// Dense token <-> id map. Ids 0..3 are [PAD], [UNK], [CLS], [SEP].
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<int> find(std::string_view token) const;
  // [UNK] for unknown tokens.
  int id(std::string_view token) const;

  static constexpr int pad_id() { return 0; }
  static constexpr int unk_id() { return 1; }
  static constexpr int cls_id() { return 2; }
  static constexpr int sep_id() { return 3; }

  // Throws InputError when the entity type has no markers.
  int marker(MarkerKind kind, std::string_view entity_type) const;
  bool is_marker(int id) const;
  bool is_reserved(int id) const { return id >= 0 && id < 4; }

  // One token per line, line number = id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Lowercases, splits on whitespace and detaches ASCII punctuation.
std::vector<std::string> split_words(std::string_view text);

// split_words mapped through the vocabulary. Empty text is an InputError.
std::vector<int> tokenize(std::string_view text, const Vocab& vocab);

// Reserved tokens, four markers per schema entity type, then every word with
// count >= min_freq ordered by count descending, ties lexicographic. Words of
// the description templates are always kept.
Vocab build_vocab(std::span<const REInstance> corpus, const PredicateSchema& schema, std::size_t min_freq);

}  // namespace dualre
