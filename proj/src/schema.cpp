#include "dualre/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dualre/error.hpp"

namespace dualre {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == '|') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

bool has_space(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// yaml-cpp reads a bare NULL or ~ as a null node; keep its spelling.
std::string scalar_of(const YAML::Node& n) {
  if (n.IsNull()) return n.Scalar().empty() ? std::string(kNullPredicate) : n.Scalar();
  return n.as<std::string>();
}

}  // namespace

std::vector<std::string> schema_violations(const std::vector<std::string>& predicates,
                                           const std::vector<std::string>& entity_types,
                                           const std::map<std::string, std::string>& templates) {
  std::vector<std::string> out;
  if (predicates.empty() || predicates.front() != kNullPredicate)
    out.push_back("predicates: NULL must be present at index 0");
  std::set<std::string> seen;
  for (const auto& p : predicates) {
    if (p.empty() || p.find('|') != std::string::npos || has_space(p))
      out.push_back("predicates: invalid predicate name '" + p + "'");
    if (!seen.insert(p).second) out.push_back("predicates: duplicate predicate '" + p + "'");
  }
  if (entity_types.empty()) out.push_back("entity_types: at least one entity type is required");
  std::set<std::string> types;
  for (const auto& t : entity_types) {
    if (t.empty() || t.find('|') != std::string::npos || t.find(']') != std::string::npos || has_space(t))
      out.push_back("entity_types: invalid entity type '" + t + "'");
    if (!types.insert(t).second) out.push_back("entity_types: duplicate entity type '" + t + "'");
  }
  std::set<std::string> covered;
  for (const auto& [key, text] : templates) {
    auto parts = split_key(key);
    if (parts.size() != 1 && parts.size() != 3) {
      out.push_back("templates: malformed key '" + key + "' (want PREDICATE or PREDICATE|SUBJTYPE|OBJTYPE)");
      continue;
    }
    if (!seen.count(parts[0])) out.push_back("templates: key '" + key + "' names unknown predicate '" + parts[0] + "'");
    covered.insert(parts[0]);
    if (parts.size() == 3) {
      for (int i = 1; i <= 2; ++i)
        if (!types.count(parts[i]))
          out.push_back("templates: key '" + key + "' names unknown entity type '" + parts[i] + "'");
    }
    const auto ns = count_occurrences(text, kSubjectSlot);
    const auto no = count_occurrences(text, kObjectSlot);
    if (ns != 1)
      out.push_back("templates: '" + key + "' must contain @subject@ exactly once, found " + std::to_string(ns));
    if (no != 1)
      out.push_back("templates: '" + key + "' must contain @object@ exactly once, found " + std::to_string(no));
  }
  for (const auto& p : predicates)
    if (!covered.count(p)) out.push_back("templates: predicate '" + p + "' has no template");
  return out;
}

PredicateSchema PredicateSchema::create(std::vector<std::string> predicates, std::vector<std::string> entity_types,
                                        std::map<std::string, std::string> templates) {
  auto violations = schema_violations(predicates, entity_types, templates);
  if (!violations.empty()) throw SchemaError(std::move(violations));
  PredicateSchema s;
  s.predicates_ = std::move(predicates);
  s.entity_types_ = std::move(entity_types);
  s.templates_ = std::move(templates);
  return s;
}

PredicateSchema PredicateSchema::from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SchemaError({std::string("unreadable schema: ") + e.what()});
  }
  std::vector<std::string> errors;
  std::vector<std::string> predicates, types;
  std::map<std::string, std::string> templates;
  if (!root.IsMap()) throw SchemaError({"schema must be a mapping with predicates, entity_types, templates"});
  auto read_list = [&](const char* section, std::vector<std::string>& dst) {
    auto n = root[section];
    if (!n || !n.IsSequence()) {
      errors.push_back(std::string(section) + ": missing or not a list");
      return;
    }
    for (const auto& item : n) dst.push_back(scalar_of(item));
  };
  read_list("predicates", predicates);
  read_list("entity_types", types);
  auto tn = root["templates"];
  if (!tn || !tn.IsMap()) {
    errors.push_back("templates: missing or not a mapping");
  } else {
    for (const auto& kv : tn) templates[scalar_of(kv.first)] = kv.second.as<std::string>();
  }
  auto rest = schema_violations(predicates, types, templates);
  errors.insert(errors.end(), rest.begin(), rest.end());
  if (!errors.empty()) throw SchemaError(std::move(errors));
  return create(std::move(predicates), std::move(types), std::move(templates));
}

PredicateSchema PredicateSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_yaml(ss.str());
}

std::string PredicateSchema::to_yaml() const {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "predicates" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : predicates_) out << YAML::DoubleQuoted << p;
  out << YAML::EndSeq;
  out << YAML::Key << "entity_types" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : entity_types_) out << YAML::DoubleQuoted << t;
  out << YAML::EndSeq;
  out << YAML::Key << "templates" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : templates_) out << YAML::Key << YAML::DoubleQuoted << k << YAML::Value << YAML::DoubleQuoted << v;
  out << YAML::EndMap << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

nlohmann::json PredicateSchema::to_json() const {
  return {{"predicates", predicates_}, {"entity_types", entity_types_}, {"templates", templates_}};
}

PredicateSchema PredicateSchema::from_json(const nlohmann::json& j) {
  return create(j.at("predicates").get<std::vector<std::string>>(),
                j.at("entity_types").get<std::vector<std::string>>(),
                j.at("templates").get<std::map<std::string, std::string>>());
}

std::optional<std::size_t> PredicateSchema::predicate_index(std::string_view name) const {
  for (std::size_t i = 0; i < predicates_.size(); ++i)
    if (predicates_[i] == name) return i;
  return std::nullopt;
}

bool PredicateSchema::has_entity_type(std::string_view type) const {
  return std::find(entity_types_.begin(), entity_types_.end(), type) != entity_types_.end();
}

const std::string* PredicateSchema::resolve(std::size_t predicate, std::string_view subject_type,
                                            std::string_view object_type) const {
  if (predicate >= predicates_.size()) return nullptr;
  const std::string& p = predicates_[predicate];
  std::string typed = p + "|" + std::string(subject_type) + "|" + std::string(object_type);
  if (auto it = templates_.find(typed); it != templates_.end()) return &it->second;
  if (auto it = templates_.find(p); it != templates_.end()) return &it->second;
  return nullptr;
}

FilledDescription fill_template(const PredicateSchema& schema, std::size_t predicate, std::string_view subject_span,
                                std::string_view object_span, std::string_view subject_type,
                                std::string_view object_type) {
  const std::string* tmpl = schema.resolve(predicate, subject_type, object_type);
  if (!tmpl) {
    const std::string name = predicate < schema.num_predicates() ? schema.predicate(predicate)
                                                                  : "#" + std::to_string(predicate);
    throw SchemaError({"no template for (" + name + ", " + std::string(subject_type) + ", " +
                       std::string(object_type) + ")"});
  }
  const std::string& t = *tmpl;
  const auto ps = t.find(kSubjectSlot);
  const auto po = t.find(kObjectSlot);
  FilledDescription out;
  auto emit = [&](std::size_t from, std::size_t to) { out.text.append(t, from, to - from); };
  const bool subject_first = ps < po;
  const std::size_t first = subject_first ? ps : po;
  const std::size_t second = subject_first ? po : ps;
  const std::size_t first_len = subject_first ? kSubjectSlot.size() : kObjectSlot.size();
  const std::size_t second_len = subject_first ? kObjectSlot.size() : kSubjectSlot.size();
  const std::string_view first_span = subject_first ? subject_span : object_span;
  const std::string_view second_span = subject_first ? object_span : subject_span;

  emit(0, first);
  CharRange r1{out.text.size(), out.text.size() + first_span.size()};
  out.text += first_span;
  emit(first + first_len, second);
  CharRange r2{out.text.size(), out.text.size() + second_span.size()};
  out.text += second_span;
  emit(second + second_len, t.size());
  out.subject = subject_first ? r1 : r2;
  out.object = subject_first ? r2 : r1;
  return out;
}

}  // namespace dualre
