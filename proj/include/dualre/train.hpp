#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualre/dataset.hpp"
#include "dualre/metrics.hpp"
#include "dualre/model.hpp"
#include "dualre/optimizer.hpp"
#include "json.hpp"

namespace dualre {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 4;
  AdamConfig adam;  // learning rate 1e-3
  std::uint64_t seed = 13;
  // NULL pairs kept per labelled pair of an instance; nullopt keeps all.
  std::optional<std::size_t> null_cap = 3;
  // Restrict candidate pairs to type pairs seen in training relations.
  bool type_filter = false;
  // 0 leaves the OpenMP default.
  int threads = 0;

  // Throws ContractError on epochs < 1, batch_size < 1, bad optimizer settings.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// One record of train_log.jsonl. Loss means are over the epoch's batches,
/// each batch contributing the mean over its pairs.
struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_l_ce = 0.0;
  double mean_l_ct = 0.0;
  double mean_l_u = 0.0;
  double dev_p = 0.0;
  double dev_r = 0.0;
  double dev_f1 = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Model model;  // parameters of the best dev epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

struct TrainData {
  std::span<const REInstance> train;
  std::span<const REInstance> dev;
  const PredicateSchema* schema = nullptr;
  const Vocab* vocab = nullptr;
};

// Fresh model over a vocabulary; encoder.vocab_size is taken from vocab.
Model make_model(const PredicateSchema& schema, const Vocab& vocab, EncoderConfig encoder, const ModelConfig& config,
                 std::uint64_t seed, std::size_t description_max_len = 64);

// Adam on the unified loss, reshuffled each epoch, dev micro-F1 after every
// epoch; the earliest best epoch wins. With an empty dev set the last epoch
// is kept. A non-finite loss raises TrainingError naming the batch.
TrainResult train(const TrainData& data, const EncoderConfig& encoder, const ModelConfig& config,
                  const TrainConfig& train_config, const std::function<void(const EpochLog&)>& on_epoch = {});

// Trains from an existing model instead of a fresh one.
TrainResult train_from(Model model, const TrainData& data, const TrainConfig& train_config,
                       const std::function<void(const EpochLog&)>& on_epoch = {});

struct PairPrediction {
  CandidatePair pair;
  std::size_t predicted = 0;
  std::vector<double> similarities;  // empty when the pair was type-filtered
};

nlohmann::json prediction_to_json(const PairPrediction& p, const REInstance& inst, const PredicateSchema& schema);

struct EvalOptions {
  // Pairs outside these type pairs are predicted NULL without scoring.
  const TypePairSet* allowed_types = nullptr;
};

// Every ordered mention pair of every instance, scored in parallel.
std::vector<PairPrediction> predict_dataset(const Model& model, std::span<const REInstance> data,
                                            const EvalOptions& options = {});
EvalReport evaluate(const Model& model, std::span<const REInstance> data, const EvalOptions& options = {});
EvalReport report_from_predictions(std::span<const PairPrediction> predictions, const PredicateSchema& schema);

struct SweepRow {
  double alpha = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;  // dev, best epoch
};

// One training run per alpha with everything else fixed; rows sorted by alpha.
std::vector<SweepRow> alpha_sweep(const TrainData& data, const EncoderConfig& encoder, const ModelConfig& config,
                                  const TrainConfig& train_config, std::span<const double> alphas);
std::string format_sweep_table(std::span<const SweepRow> rows);
nlohmann::json sweep_to_json(std::span<const SweepRow> rows);

struct AblationVariant {
  std::string name;
  ModelConfig config;
};

// full, no_cls_concat, no_ce_loss, shared_encoder; each flips one flag of base.
std::vector<AblationVariant> ablation_variants(const ModelConfig& base);

struct AblationRow {
  std::string variant;
  ModelConfig config;
  EvalReport test;
  std::size_t best_epoch = 0;
};

std::vector<AblationRow> ablate(const TrainData& data, std::span<const REInstance> test, const EncoderConfig& encoder,
                                const ModelConfig& base, const TrainConfig& train_config);
std::string format_ablation_table(std::span<const AblationRow> rows);
nlohmann::json ablation_to_json(std::span<const AblationRow> rows);

}  // namespace dualre
