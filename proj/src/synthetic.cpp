#include "dualre/synthetic.hpp"

#include <fstream>
#include <random>

#include "dualre/dataset.hpp"
#include "dualre/error.hpp"
#include "dualre/params.hpp"

namespace dualre {

namespace {

const std::vector<std::string> kChemicals = {"aspirin",  "ibuprofen", "metformin",     "cisplatin", "tamoxifen",
                                             "imatinib", "rapamycin", "dexamethasone", "lithium",   "caffeine",
                                             "nicotine", "ethanol",   "warfarin",      "heparin",   "paclitaxel"};
const std::vector<std::string> kDiseases = {"breast cancer", "asthma",    "diabetes",    "heart failure", "migraine",
                                            "arthritis",     "lung cancer", "hepatitis", "psoriasis",     "anemia",
                                            "epilepsy",      "kidney injury", "hypertension", "leukemia", "obesity"};
const std::vector<std::string> kGenes = {"BRCA1", "TP53", "EGFR", "KRAS", "MTOR", "HER2", "VEGF", "JAK2",
                                         "BCL2",  "MYC",  "PTEN", "ALK",  "CDK4", "STAT3", "AKT1"};
const std::vector<std::string> kPrefix = {"in", "this", "study", "we", "observed", "that", "results", "show",
                                          "clinically", "notably", "recent", "data", "suggest"};
const std::vector<std::string> kSuffix = {"in", "adults", "over", "time", "at", "high", "doses", "in", "mice",
                                          "during", "follow-up", "significantly"};
const std::vector<std::string> kJoin = {"with", "alongside", "near", "despite"};

const std::vector<std::string>& lexicon(const std::string& type) {
  if (type == "Chemical") return kChemicals;
  if (type == "Disease") return kDiseases;
  return kGenes;
}

template <typename T>
const T& choose(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<std::string> split_name(const std::string& name) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : name) {
    if (c == ' ') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void append_filler(std::vector<std::string>& tokens, const std::vector<std::string>& words, std::size_t max_n,
                   Rng& rng) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_n)(rng);
  for (std::size_t i = 0; i < n; ++i) tokens.push_back(choose(words, rng));
}

std::size_t append_mention(REInstance& inst, const std::string& type, Rng& rng) {
  const auto words = split_name(choose(lexicon(type), rng));
  Mention m{inst.tokens.size(), inst.tokens.size() + words.size(), type};
  inst.tokens.insert(inst.tokens.end(), words.begin(), words.end());
  inst.mentions.push_back(m);
  return inst.mentions.size() - 1;
}

}  // namespace

const std::vector<CueClass>& synthetic_cue_classes() {
  static const std::vector<CueClass> classes = {
      {"TREATS", {"treats", "relieves", "cures"}, {{"Chemical", "Disease"}}},
      {"CAUSES", {"causes", "induces", "triggers"}, {{"Chemical", "Disease"}, {"Gene", "Disease"}}},
      {"INHIBITS", {"inhibits", "blocks", "suppresses"}, {{"Chemical", "Gene"}}},
  };
  return classes;
}

PredicateSchema synthetic_schema() {
  return PredicateSchema::create(
      {"NULL", "TREATS", "CAUSES", "INHIBITS"}, {"Chemical", "Disease", "Gene"},
      {{"NULL", "There are no relations between the @subject@ and @object@."},
       {"TREATS", "Applies a @subject@ remedy with the object of effecting a cure or managing a @object@ condition."},
       {"CAUSES", "@subject@ brings about or produces @object@."},
       {"INHIBITS", "@subject@ decreases or blocks the activity of @object@."}});
}

std::vector<REInstance> make_synthetic(std::size_t count, std::uint64_t seed, const std::string& id_prefix) {
  const auto& classes = synthetic_cue_classes();
  const std::vector<std::string> types = {"Chemical", "Disease", "Gene"};
  std::vector<REInstance> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Rng rng(mix_seed(seed, n));
    const CueClass& cls = choose(classes, rng);
    const auto& [st, ot] = choose(cls.type_pairs, rng);
    REInstance inst;
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", id_prefix.c_str(), n);
    inst.id = id;

    const bool third = rng() % 2 == 0;
    const bool third_first = rng() % 2 == 0;
    const std::string third_type = choose(types, rng);

    append_filler(inst.tokens, kPrefix, 3, rng);
    if (third && third_first) {
      append_mention(inst, third_type, rng);
      inst.tokens.push_back(",");
    }
    const std::size_t a = append_mention(inst, st, rng);
    inst.tokens.push_back(choose(cls.cues, rng));
    const std::size_t b = append_mention(inst, ot, rng);
    if (third && !third_first) {
      inst.tokens.push_back(choose(kJoin, rng));
      append_mention(inst, third_type, rng);
    }
    append_filler(inst.tokens, kSuffix, 3, rng);
    inst.tokens.push_back(".");
    inst.relations.push_back({a, b, cls.predicate});
    out.push_back(std::move(inst));
  }
  return out;
}

void write_synthetic_corpus(const std::filesystem::path& dir, std::uint64_t seed, const SyntheticSizes& sizes) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream os(dir / "schema.yaml");
    if (!os) throw IoError("cannot write " + (dir / "schema.yaml").string());
    os << synthetic_schema().to_yaml();
  }
  write_dataset(dir / "train.jsonl", make_synthetic(sizes.train, mix_seed(seed, 1), "train"));
  write_dataset(dir / "dev.jsonl", make_synthetic(sizes.dev, mix_seed(seed, 2), "dev"));
  write_dataset(dir / "test.jsonl", make_synthetic(sizes.test, mix_seed(seed, 3), "test"));
  std::ofstream os(dir / "config.yaml");
  if (!os) throw IoError("cannot write " + (dir / "config.yaml").string());
  os << "data:\n"
        "  schema: schema.yaml\n"
        "  train: train.jsonl\n"
        "  dev: dev.jsonl\n"
        "  test: test.jsonl\n"
        "output: out\n"
        "seed: 13\n";
}

}  // namespace dualre
