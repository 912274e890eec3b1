#include "dualre/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "dualre/error.hpp"

namespace dualre {

std::string marker_token(MarkerKind kind, std::string_view entity_type) {
  const char* head = "";
  switch (kind) {
    case MarkerKind::SubjectStart: head = "[SUB:"; break;
    case MarkerKind::SubjectEnd: head = "[/SUB:"; break;
    case MarkerKind::ObjectStart: head = "[OBJ:"; break;
    case MarkerKind::ObjectEnd: head = "[/OBJ:"; break;
  }
  return std::string(head) + std::string(entity_type) + "]";
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const std::string_view reserved[] = {kPadToken, kUnkToken, kClsToken, kSepToken};
  if (tokens_.size() < 4) throw InputError("vocabulary must start with [PAD] [UNK] [CLS] [SEP]");
  for (int i = 0; i < 4; ++i)
    if (tokens_[static_cast<std::size_t>(i)] != reserved[i])
      throw InputError("vocabulary id " + std::to_string(i) + " must be " + std::string(reserved[i]));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw InputError("vocabulary token " + std::to_string(i) + " is empty");
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw InputError("vocabulary token '" + tokens_[i] + "' appears twice");
  }
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(std::string_view token) const { return find(token).value_or(unk_id()); }

int Vocab::marker(MarkerKind kind, std::string_view entity_type) const {
  auto tok = marker_token(kind, entity_type);
  auto id = find(tok);
  if (!id) throw InputError("vocabulary has no marker " + tok);
  return *id;
}

bool Vocab::is_marker(int id) const {
  if (id < 4 || static_cast<std::size_t>(id) >= tokens_.size()) return false;
  const std::string& t = tokens_[static_cast<std::size_t>(id)];
  if (t.size() < 3 || t.front() != '[' || t.back() != ']') return false;
  return t.rfind("[SUB:", 0) == 0 || t.rfind("[/SUB:", 0) == 0 || t.rfind("[OBJ:", 0) == 0 ||
         t.rfind("[/OBJ:", 0) == 0;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing vocabulary " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 128 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur += static_cast<char>(c < 128 ? std::tolower(c) : c);
    }
  }
  flush();
  return out;
}

std::vector<int> tokenize(std::string_view text, const Vocab& vocab) {
  auto words = split_words(text);
  if (words.empty()) throw InputError("tokenize: empty text");
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  return ids;
}

Vocab build_vocab(std::span<const REInstance> corpus, const PredicateSchema& schema, std::size_t min_freq) {
  if (corpus.empty()) throw ContractError("build_vocab: corpus is empty");
  std::map<std::string, std::size_t> counts;
  for (const auto& inst : corpus)
    for (const auto& tok : inst.tokens)
      for (auto& w : split_words(tok)) ++counts[w];

  std::set<std::string> template_words;
  for (const auto& [key, text] : schema.templates()) {
    std::string stripped = text;
    for (auto slot : {kSubjectSlot, kObjectSlot})
      for (auto pos = stripped.find(slot); pos != std::string::npos; pos = stripped.find(slot))
        stripped.replace(pos, slot.size(), " ");
    for (auto& w : split_words(stripped)) {
      ++counts[w];
      template_words.insert(w);
    }
  }

  std::vector<std::pair<std::string, std::size_t>> words;
  for (auto& [w, n] : counts)
    if (n >= min_freq || template_words.count(w)) words.emplace_back(w, n);
  std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
                                  std::string(kSepToken)};
  for (const auto& type : schema.entity_types())
    for (auto kind : {MarkerKind::SubjectStart, MarkerKind::SubjectEnd, MarkerKind::ObjectStart, MarkerKind::ObjectEnd})
      tokens.push_back(marker_token(kind, type));
  for (auto& [w, n] : words) tokens.push_back(w);
  return Vocab(std::move(tokens));
}

}  // namespace dualre
