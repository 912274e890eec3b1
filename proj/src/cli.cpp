#include "dualre/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dualre/checkpoint.hpp"
#include "dualre/dataset.hpp"
#include "dualre/error.hpp"
#include "dualre/gradcheck.hpp"
#include "dualre/synthetic.hpp"

namespace dualre {

namespace fs = std::filesystem;

namespace {

nlohmann::json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& kv : node) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& v : node) j.push_back(yaml_to_json(v));
      return j;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      long long i;
      double d;
      bool b;
      if (YAML::convert<long long>::decode(node, i)) return i;
      if (YAML::convert<double>::decode(node, d)) return d;
      if (YAML::convert<bool>::decode(node, b)) return b;
      if (s == "~" || s == "null") return nullptr;
      return s;
    }
    default:
      return nullptr;
  }
}

template <typename T>
void read_section(const nlohmann::json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_object()) throw ContractError(std::string("config: '") + key + "' must be a mapping");
  from_json(j.at(key), target);
}

}  // namespace

void RunConfig::validate() const {
  EncoderConfig e = encoder;
  if (e.vocab_size == 0) e.vocab_size = 8;  // set from the vocabulary later
  e.validate();
  model.validate();
  training.validate();
  if (description_max_len < 8) throw ContractError("description_max_len must be at least 8");
  if (min_freq < 1) throw ContractError("min_freq must be at least 1");
}

nlohmann::json RunConfig::to_json() const {
  return {{"data",
           {{"schema", schema.string()},
            {"train", train.string()},
            {"dev", dev.string()},
            {"test", test.string()},
            {"vocab", vocab.string()}}},
          {"output", output.string()},
          {"encoder", encoder},
          {"model", model},
          {"training", training},
          {"description_max_len", description_max_len},
          {"min_freq", min_freq}};
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path.string());
  YAML::Node root;
  try {
    root = YAML::Load(is);
  } catch (const YAML::Exception& e) {
    throw ContractError("config " + path.string() + ": " + e.what());
  }
  const nlohmann::json j = yaml_to_json(root);
  if (!j.is_object()) throw ContractError("config " + path.string() + " must be a mapping");
  const fs::path base = path.parent_path();
  auto resolve = [&](const nlohmann::json& v) -> fs::path {
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };

  RunConfig c;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      for (auto [key, target] : {std::pair{"schema", &c.schema}, {"train", &c.train}, {"dev", &c.dev},
                                 {"test", &c.test}, {"vocab", &c.vocab}})
        if (d.contains(key)) *target = resolve(d.at(key));
    }
    if (j.contains("output")) c.output = resolve(j.at("output"));
    read_section(j, "encoder", c.encoder);
    read_section(j, "model", c.model);
    read_section(j, "training", c.training);
    if (j.contains("seed")) c.training.seed = j.at("seed").get<std::uint64_t>();
    c.description_max_len = j.value("description_max_len", c.description_max_len);
    c.min_freq = j.value("min_freq", c.min_freq);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError("config " + path.string() + ": " + e.what());
  }
  return c;
}

namespace {

struct Overrides {
  std::string config;
  std::string schema, train, dev, test, vocab, output;
  std::uint64_t seed = 0;
  double alpha = 0.0, lr = 0.0;
  std::size_t epochs = 0, batch_size = 0, null_cap = 0;
  int threads = 0;
  bool no_cls = false, no_ce = false, shared = false;
};

void add_run_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "YAML run configuration");
  app->add_option("--schema", o.schema, "predicate schema (YAML)");
  app->add_option("--train", o.train, "training set (JSONL)");
  app->add_option("--dev", o.dev, "development set (JSONL)");
  app->add_option("--test", o.test, "test set (JSONL)");
  app->add_option("--vocab", o.vocab, "vocabulary file; built from the training set when absent");
  app->add_option("--out", o.output, "output directory");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--alpha", o.alpha, "cross-entropy weight in the unified loss");
  app->add_option("--epochs", o.epochs, "training epochs");
  app->add_option("--batch-size", o.batch_size, "pairs per batch");
  app->add_option("--lr", o.lr, "learning rate");
  app->add_option("--null-cap", o.null_cap, "NULL pairs kept per labelled pair during training");
  app->add_option("--threads", o.threads, "OpenMP threads");
  app->add_flag("--no-cls-concat", o.no_cls, "drop the input [CLS] from description representations");
  app->add_flag("--no-ce-loss", o.no_ce, "train on the contrastive loss alone");
  app->add_flag("--shared-encoder", o.shared, "one encoder for inputs and descriptions");
}

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

RunConfig resolve_config(const CLI::App* app, const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (given(app, "--schema")) c.schema = o.schema;
  if (given(app, "--train")) c.train = o.train;
  if (given(app, "--dev")) c.dev = o.dev;
  if (given(app, "--test")) c.test = o.test;
  if (given(app, "--vocab")) c.vocab = o.vocab;
  if (given(app, "--out")) c.output = o.output;
  if (given(app, "--seed")) c.training.seed = o.seed;
  if (given(app, "--alpha")) c.model.alpha = o.alpha;
  if (given(app, "--epochs")) c.training.epochs = o.epochs;
  if (given(app, "--batch-size")) c.training.batch_size = o.batch_size;
  if (given(app, "--lr")) c.training.adam.learning_rate = o.lr;
  if (given(app, "--null-cap")) c.training.null_cap = o.null_cap;
  if (given(app, "--threads")) c.training.threads = o.threads;
  if (o.no_cls) c.model.use_cls_concat = false;
  if (o.no_ce) c.model.use_ce_loss = false;
  if (o.shared) c.model.dual_encoder = false;
  c.validate();
  return c;
}

void require(const fs::path& p, const char* what) {
  if (p.empty()) throw ContractError(std::string("no ") + what + " path given");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

Vocab vocab_for(const RunConfig& c, std::span<const REInstance> train, const PredicateSchema& schema) {
  if (!c.vocab.empty()) return Vocab::load(c.vocab);
  return build_vocab(train, schema, c.min_freq);
}

TrainData train_data(const std::vector<REInstance>& train, const std::vector<REInstance>& dev,
                     const PredicateSchema& schema, const Vocab& vocab) {
  return {train, dev, &schema, &vocab};
}

int cmd_validate(const std::string& data, const std::string& schema_path, std::ostream& out) {
  const PredicateSchema schema = PredicateSchema::load(schema_path);
  const DatasetScan scan = scan_dataset(data, schema);
  for (const auto& v : scan.violations) out << v << '\n';
  out << scan.instances.size() << " instances, " << scan.violations.size() << " violations\n";
  return scan.violations.empty() ? 0 : 1;
}

int cmd_build_vocab(const RunConfig& c, std::ostream& out) {
  require(c.schema, "schema");
  require(c.train, "training set");
  const PredicateSchema schema = PredicateSchema::load(c.schema);
  const auto train = parse_dataset(c.train, schema);
  const Vocab vocab = build_vocab(train, schema, c.min_freq);
  make_dir(c.output);
  vocab.save(c.output / "vocab.txt");
  out << "wrote " << vocab.size() << " tokens to " << (c.output / "vocab.txt").string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  require(c.schema, "schema");
  require(c.train, "training set");
  const PredicateSchema schema = PredicateSchema::load(c.schema);
  const auto train = parse_dataset(c.train, schema);
  const auto dev = c.dev.empty() ? std::vector<REInstance>{} : parse_dataset(c.dev, schema);
  const Vocab vocab = vocab_for(c, train, schema);
  make_dir(c.output);
  write_text(c.output / "run_config.json", dump(c.to_json()));
  vocab.save(c.output / "vocab.txt");

  std::ofstream log(c.output / "train_log.jsonl", std::ios::trunc);
  if (!log) throw IoError("cannot write " + (c.output / "train_log.jsonl").string());
  EncoderConfig enc = c.encoder;
  enc.vocab_size = vocab.size();
  Model fresh = make_model(schema, vocab, enc, c.model, c.training.seed, c.description_max_len);
  TrainResult r = train_from(std::move(fresh), train_data(train, dev, schema, vocab), c.training,
                             [&](const EpochLog& e) {
                               log << e.to_json().dump() << '\n';
                               log.flush();
                               char buf[160];
                               std::snprintf(buf, sizeof buf,
                                             "epoch %2zu  L_ce %.4f  L_ct %.4f  L_u %.4f  dev P %.4f R %.4f F1 %.4f\n",
                                             e.epoch, e.mean_l_ce, e.mean_l_ct, e.mean_l_u, e.dev_p, e.dev_r,
                                             e.dev_f1);
                               out << buf << std::flush;
                             });
  if (!log) throw IoError("failed writing train log");
  save_checkpoint(c.output / "checkpoint", r.model);
  const EpochLog& best = r.log.at(r.best_epoch - 1);
  char buf[160];
  std::snprintf(buf, sizeof buf, "best epoch %zu: dev P %.4f R %.4f F1 %.4f\n", r.best_epoch, best.dev_p, best.dev_r,
                best.dev_f1);
  out << buf;
  return 0;
}

EvalOptions eval_options(const RunConfig& c, const Model& model, TypePairSet& storage) {
  if (!c.training.type_filter) return {};
  require(c.train, "training set (needed by type filtering)");
  const auto train = parse_dataset(c.train, model.schema);
  storage = observed_type_pairs(train);
  return {&storage};
}

int cmd_eval(const RunConfig& c, const std::string& checkpoint, const std::string& data, std::ostream& out) {
  const Model model = load_checkpoint(checkpoint);
  const auto set = parse_dataset(data, model.schema);
  TypePairSet types;
  const EvalReport rep = evaluate(model, set, eval_options(c, model, types));
  make_dir(c.output);
  write_text(c.output / "eval_report.json", dump(rep.to_json()));
  write_text(c.output / "eval_report.txt", rep.to_text());
  out << rep.to_text();
  return 0;
}

int cmd_predict(const RunConfig& c, const std::string& checkpoint, const std::string& data, std::ostream& out) {
  const Model model = load_checkpoint(checkpoint);
  const auto set = parse_dataset(data, model.schema);
  TypePairSet types;
  const auto preds = predict_dataset(model, set, eval_options(c, model, types));
  make_dir(c.output);
  std::ostringstream os;
  for (const auto& p : preds) os << prediction_to_json(p, set[p.pair.instance_index], model.schema).dump() << '\n';
  write_text(c.output / "predictions.jsonl", os.str());
  out << "wrote " << preds.size() << " predictions to " << (c.output / "predictions.jsonl").string() << '\n';
  return 0;
}

int cmd_gradcheck(const CLI::App* app, std::uint64_t seed, std::size_t max_entries, std::ostream& out) {
  GradcheckConfig g;
  if (given(app, "--seed")) g.seed = seed;
  g.max_entries_per_group = max_entries;
  const GradcheckReport rep = gradcheck_model(g);
  out << rep.to_text();
  out << (rep.pass() ? "all groups pass" : "gradient check FAILED") << " (tolerance " << g.tolerance << ")\n";
  return rep.pass() ? 0 : 1;
}

int cmd_sweep(const RunConfig& c, const std::vector<double>& alphas, std::ostream& out) {
  require(c.schema, "schema");
  require(c.train, "training set");
  require(c.dev, "development set");
  const PredicateSchema schema = PredicateSchema::load(c.schema);
  const auto train = parse_dataset(c.train, schema);
  const auto dev = parse_dataset(c.dev, schema);
  const Vocab vocab = vocab_for(c, train, schema);
  EncoderConfig enc = c.encoder;
  enc.vocab_size = vocab.size();
  const auto rows = alpha_sweep(train_data(train, dev, schema, vocab), enc, c.model, c.training, alphas);
  make_dir(c.output);
  const std::string table = format_sweep_table(rows);
  write_text(c.output / "sweep.txt", table);
  write_text(c.output / "sweep.json", dump(sweep_to_json(rows)));
  out << table;
  return 0;
}

int cmd_ablate(const RunConfig& c, std::ostream& out) {
  require(c.schema, "schema");
  require(c.train, "training set");
  require(c.test, "test set");
  const PredicateSchema schema = PredicateSchema::load(c.schema);
  const auto train = parse_dataset(c.train, schema);
  const auto dev = c.dev.empty() ? std::vector<REInstance>{} : parse_dataset(c.dev, schema);
  const auto test = parse_dataset(c.test, schema);
  const Vocab vocab = vocab_for(c, train, schema);
  EncoderConfig enc = c.encoder;
  enc.vocab_size = vocab.size();
  const auto rows = ablate(train_data(train, dev, schema, vocab), test, enc, c.model, c.training);
  make_dir(c.output);
  const std::string table = format_ablation_table(rows);
  write_text(c.output / "ablation.txt", table);
  write_text(c.output / "ablation.json", dump(ablation_to_json(rows)));
  out << table;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-encoder relation extraction with instance-filled predicate descriptions", "dualre"};
  app.require_subcommand(1);

  std::string data_path, schema_path, checkpoint;
  auto* validate = app.add_subcommand("validate", "check a dataset against a schema");
  validate->add_option("data", data_path, "dataset (JSONL)")->required();
  validate->add_option("--schema", schema_path, "predicate schema (YAML)")->required();

  Overrides vo, to, eo, po, so, ao;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "build a vocabulary from the training set");
  add_run_options(vocab_cmd, vo);
  std::size_t min_freq = 1;
  vocab_cmd->add_option("--min-freq", min_freq, "minimum word count");

  auto* train_cmd = app.add_subcommand("train", "train and save the best checkpoint");
  add_run_options(train_cmd, to);

  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset");
  add_run_options(eval_cmd, eo);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "dataset (JSONL)")->required();

  auto* predict_cmd = app.add_subcommand("predict", "per-pair predictions with similarity vectors");
  add_run_options(predict_cmd, po);
  predict_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict_cmd->add_option("--data", data_path, "dataset (JSONL)")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the unified loss on a toy model");
  std::uint64_t grad_seed = 0;
  std::size_t max_entries = 0;
  grad_cmd->add_option("--seed", grad_seed, "random seed");
  grad_cmd->add_option("--max-entries", max_entries, "entries checked per parameter group (0 = all)");

  auto* sweep_cmd = app.add_subcommand("sweep", "one training run per alpha");
  add_run_options(sweep_cmd, so);
  std::vector<double> alphas = {0.1, 0.3, 0.5, 0.7};
  sweep_cmd->add_option("--alphas", alphas, "alpha grid")->delimiter(',');

  auto* ablate_cmd = app.add_subcommand("ablate", "train the four ablation variants and score them on the test set");
  add_run_options(ablate_cmd, ao);

  std::string synth_dir = "data/synthetic";
  std::uint64_t synth_seed = 1;
  SyntheticSizes sizes;
  auto* synth_cmd = app.add_subcommand("make-synthetic", "write the cue-word corpus");
  synth_cmd->add_option("--out", synth_dir, "output directory");
  synth_cmd->add_option("--seed", synth_seed, "random seed");
  synth_cmd->add_option("--train-size", sizes.train, "training instances");
  synth_cmd->add_option("--dev-size", sizes.dev, "development instances");
  synth_cmd->add_option("--test-size", sizes.test, "test instances");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(data_path, schema_path, out);
    if (*vocab_cmd) {
      RunConfig c = resolve_config(vocab_cmd, vo);
      if (given(vocab_cmd, "--min-freq")) c.min_freq = min_freq;
      c.validate();
      return cmd_build_vocab(c, out);
    }
    if (*train_cmd) return cmd_train(resolve_config(train_cmd, to), out);
    if (*eval_cmd) return cmd_eval(resolve_config(eval_cmd, eo), checkpoint, data_path, out);
    if (*predict_cmd) return cmd_predict(resolve_config(predict_cmd, po), checkpoint, data_path, out);
    if (*grad_cmd) return cmd_gradcheck(grad_cmd, grad_seed, max_entries, out);
    if (*sweep_cmd) return cmd_sweep(resolve_config(sweep_cmd, so), alphas, out);
    if (*ablate_cmd) return cmd_ablate(resolve_config(ablate_cmd, ao), out);
    if (*synth_cmd) {
      write_synthetic_corpus(synth_dir, synth_seed, sizes);
      out << "wrote synthetic corpus to " << synth_dir << '\n';
      return 0;
    }
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    for (const auto& v : e.violations()) err << v << '\n';
    err << e.violations().size() << " violations\n";
    return 1;
  } catch (const SchemaError& e) {
    for (const auto& v : e.violations()) err << "schema: " << v << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace dualre
