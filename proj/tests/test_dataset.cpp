#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "dualre/dataset.hpp"
#include "dualre/encoder.hpp"
#include "dualre/error.hpp"
#include "dualre/synthetic.hpp"

using namespace dualre;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("dualre_test_" + name);
  std::ofstream(p) << text;
  return p;
}

REInstance with_mentions(std::size_t n, std::vector<GoldRelation> rels = {}) {
  REInstance r;
  r.id = "m" + std::to_string(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.tokens.push_back("w" + std::to_string(i));
    r.mentions.push_back({i, i + 1, i % 2 ? "Disease" : "Chemical"});
  }
  r.relations = std::move(rels);
  return r;
}

}  // namespace

TEST(ParseDataset, WellFormedTwoLines) {
  const auto schema = synthetic_schema();
  const auto p = write_file("ok.jsonl",
                            R"({"id": "a", "tokens": ["aspirin", "treats", "asthma"], "mentions": [[0, 1, "Chemical"], [2, 3, "Disease"]], "relations": [[0, 1, "TREATS"]]}

{"id": "b", "tokens": ["x", "y"], "mentions": [], "relations": []}
)");
  const auto data = parse_dataset(p, schema);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].relations[0].predicate, "TREATS");
  EXPECT_EQ(data[0].span_text(1), "asthma");
  fs::remove(p);
}

TEST(ParseDataset, ReportsEveryViolationWithLineNumbers) {
  const auto schema = synthetic_schema();
  const auto p = write_file("bad.jsonl",
                            R"({"id": "a", "tokens": ["x", "y"], "mentions": [[0, 3, "Chemical"]], "relations": []}
{"id": "b", "tokens": ["x", "y", "z"], "mentions": [[0, 1, "Chemical"], [2, 3, "Disease"]], "relations": [[0, 1, "TREATS"], [0, 1, "CAUSES"]]}
not json
{"id": "c", "tokens": ["x", "y"], "mentions": [[0, 1, "Planet"], [1, 2, "Disease"]], "relations": [[0, 1, "ORBITS"]]}
{"id": "a", "tokens": ["x"], "mentions": [], "relations": []}
{"id": "d", "tokens": ["x", "y"], "mentions": [[0, 2, "Chemical"], [1, 2, "Disease"]], "relations": [[0, 1, "NULL"]]}
)");
  try {
    parse_dataset(p, schema);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const auto& v = e.violations();
    auto line_has = [&](int line, const std::string& needle) {
      const std::string tag = p.string() + ":" + std::to_string(line) + ": ";
      return std::any_of(v.begin(), v.end(), [&](const std::string& s) {
        return s.rfind(tag, 0) == 0 && s.find(needle) != std::string::npos;
      });
    };
    EXPECT_TRUE(line_has(1, "span [0, 3)"));
    EXPECT_TRUE(line_has(2, "duplicates pair (0, 1)"));
    EXPECT_TRUE(line_has(3, "malformed JSON"));
    EXPECT_TRUE(line_has(4, "unknown entity type 'Planet'"));
    EXPECT_TRUE(line_has(4, "unknown predicate 'ORBITS'"));
    EXPECT_TRUE(line_has(5, "duplicate instance id 'a'"));
    EXPECT_TRUE(line_has(6, "overlap"));
    EXPECT_TRUE(line_has(6, "NULL"));
  }
  fs::remove(p);
}

TEST(ParseDataset, MissingFileIsIoError) {
  EXPECT_THROW(parse_dataset("/nonexistent/data.jsonl", synthetic_schema()), IoError);
}

TEST(ParseDataset, JsonRoundTrip) {
  const auto data = make_synthetic(20, 4, "rt");
  const auto p = fs::temp_directory_path() / "dualre_test_rt.jsonl";
  write_dataset(p, data);
  EXPECT_EQ(parse_dataset(p, synthetic_schema()), data);
  fs::remove(p);
}

TEST(TemplateCoverage, InstanceNeedsATemplateForEveryTypePair) {
  const auto schema = PredicateSchema::create({"NULL", "R"}, {"A", "B"},
                                              {{"NULL", "none @subject@ @object@"}, {"R|A|B", "@subject@ r @object@"}});
  REInstance r;
  r.id = "x";
  r.tokens = {"p", "q"};
  r.mentions = {{0, 1, "A"}, {1, 2, "B"}};
  const auto v = instance_violations(r, schema);
  // (B, A) has no R template.
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v.front().find("R|B|A"), std::string::npos);
}

TEST(GeneratePairs, CountingExamples) {
  const auto schema = synthetic_schema();
  const auto two = generate_pairs(with_mentions(2, {{0, 1, "TREATS"}}), 0, schema);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].label, 1u);
  EXPECT_EQ(two[1].label, 0u);
  const auto three = generate_pairs(with_mentions(3), 0, schema);
  EXPECT_EQ(three.size(), 6u);
  for (const auto& p : three) {
    EXPECT_EQ(p.label, 0u);
    EXPECT_NE(p.subject, p.object);
  }
}

TEST(GeneratePairs, NullCapIsDeterministic) {
  const auto schema = synthetic_schema();
  const auto inst = with_mentions(4, {{0, 1, "TREATS"}, {2, 3, "CAUSES"}});
  PairOptions opt;
  opt.null_cap = 1;
  opt.seed = 42;
  const auto a = generate_pairs(inst, 0, schema, opt);
  const auto b = generate_pairs(inst, 0, schema, opt);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(std::count_if(a.begin(), a.end(), [](const CandidatePair& p) { return p.label != 0; }), 2);
  // Different seeds eventually pick different NULL pairs.
  bool differs = false;
  for (std::uint64_t s = 0; s < 20 && !differs; ++s) {
    opt.seed = s;
    differs = generate_pairs(inst, 0, schema, opt) != a;
  }
  EXPECT_TRUE(differs);
}

TEST(GeneratePairs, TypeFilterIsOptIn) {
  const auto schema = synthetic_schema();
  const auto inst = with_mentions(3, {{0, 1, "TREATS"}});
  const TypePairSet allowed = observed_type_pairs(std::vector<REInstance>{inst});
  PairOptions opt;
  opt.allowed_types = &allowed;
  const auto filtered = generate_pairs(inst, 0, schema, opt);
  for (const auto& p : filtered) {
    EXPECT_EQ(inst.mentions[p.subject].type, "Chemical");
    EXPECT_EQ(inst.mentions[p.object].type, "Disease");
  }
  EXPECT_EQ(filtered.size(), 2u);  // (0,1) and (2,1)
}

TEST(MakeBatch, CardinalityAndPadding) {
  const auto schema = synthetic_schema();
  const auto data = make_synthetic(6, 9, "b");
  const Vocab vocab = build_vocab(data, schema, 1);
  std::vector<CandidatePair> pairs;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (auto& p : generate_pairs(data[i], i, schema)) pairs.push_back(p);
  const Batch one = make_batch(std::span(pairs).first(1), data, schema, vocab, {});
  EXPECT_EQ(one.inputs.size(), 1u);
  EXPECT_EQ(one.descriptions.size(), schema.num_predicates());
  const Batch all = make_batch(pairs, data, schema, vocab, {});
  EXPECT_EQ(all.descriptions.size(), pairs.size() * schema.num_predicates());
  const std::size_t len = all.inputs[0].ids.size();
  for (const auto& s : all.inputs) {
    EXPECT_EQ(s.ids.size(), len);
    for (std::size_t i = 0; i < len; ++i) EXPECT_EQ(s.mask[i] == 0, s.ids[i] == Vocab::pad_id());
  }
  EXPECT_EQ(make_batch(pairs, data, schema, vocab, {}).inputs[3].ids, all.inputs[3].ids);
}

TEST(MakeBatch, ErrorsNameThePair) {
  const auto schema = synthetic_schema();
  auto data = make_synthetic(1, 9, "e");
  const Vocab vocab = build_vocab(data, schema, 1);
  const auto pairs = generate_pairs(data[0], 0, schema);
  SequenceLimits tight;
  tight.input_max_len = 4;
  try {
    make_batch(pairs, data, schema, vocab, tight);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("pair (e-0000, 0, 1)"), std::string::npos) << e.what();
  }
}

TEST(MakeBatch, PaddingDoesNotAffectEncodings) {
  const auto schema = synthetic_schema();
  const auto data = make_synthetic(4, 11, "p");
  const Vocab vocab = build_vocab(data, schema, 1);
  EncoderConfig cfg{1, 2, 8, 16, 128, vocab.size(), 0.3};
  ParamStore store;
  Rng rng(1);
  const auto enc = add_encoder_params(store, "e", cfg, rng);
  const auto pair = generate_pairs(data[0], 0, schema).front();
  const auto seqs = prepare_pair(pair, data[0], schema, vocab, {});
  const PaddedSequence tight = pad_sequence(seqs.input, seqs.input.ids.size());
  PaddedSequence padded = pad_sequence(seqs.input, seqs.input.ids.size() + 5);
  const Tensor a = encode(store, enc, cfg, tight.ids, tight.mask);
  const Tensor b = encode(store, enc, cfg, padded.ids, padded.mask);
  for (std::size_t k = seqs.input.ids.size(); k < padded.ids.size(); ++k) padded.ids[k] = 7;
  const Tensor c = encode(store, enc, cfg, padded.ids, padded.mask);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t col = 0; col < a.cols(); ++col) {
      EXPECT_NEAR(a.at(r, col), b.at(r, col), 1e-12);
      EXPECT_EQ(b.at(r, col), c.at(r, col));
    }
}

TEST(Synthetic, CorpusIsValidAndCueDetermined) {
  const auto schema = synthetic_schema();
  const auto data = make_synthetic(100, 5, "s");
  for (const auto& inst : data) {
    EXPECT_TRUE(instance_violations(inst, schema).empty()) << inst.id;
    ASSERT_EQ(inst.relations.size(), 1u);
    const auto& rel = inst.relations[0];
    const std::string& cue = inst.tokens[inst.mentions[rel.subject].end];
    bool found = false;
    for (const auto& c : synthetic_cue_classes())
      if (std::find(c.cues.begin(), c.cues.end(), cue) != c.cues.end()) {
        EXPECT_EQ(c.predicate, rel.predicate);
        found = true;
      }
    EXPECT_TRUE(found) << cue;
    EXPECT_EQ(inst.mentions[rel.object].start, inst.mentions[rel.subject].end + 1);
  }
  EXPECT_EQ(make_synthetic(10, 5, "s"), std::vector<REInstance>(data.begin(), data.begin() + 10));
}
