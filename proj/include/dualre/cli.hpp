#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualre/encoder.hpp"
#include "dualre/model.hpp"
#include "dualre/train.hpp"

namespace dualre {

/// Everything a run needs. Paths in a config file are relative to that file.
struct RunConfig {
  std::filesystem::path schema, train, dev, test, vocab, output = "out";
  EncoderConfig encoder;
  ModelConfig model;
  TrainConfig training;
  std::size_t description_max_len = 64;
  std::size_t min_freq = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// YAML keys: data {schema, train, dev, test, vocab}, output, seed, encoder
// {...}, model {...}, training {...}, description_max_len, min_freq.
RunConfig load_run_config(const std::filesystem::path& path);

// Exit codes: 0 success, 1 contract or data failure, 2 I/O failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dualre
