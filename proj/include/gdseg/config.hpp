#pragma once

#include <cstdint>
#include <string>

#include "gdseg/encoder.hpp"

namespace gdseg {

struct TrainConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  int warmup_steps = 8000;
  int token_budget = 4096;
  long max_steps = 0;
  int eval_every = 200;
  std::uint64_t seed = 1;
  int min_count = 1;
  double target_f1 = 0.0;  // stop early when dev F1 reaches this (0 = never)

  void validate() const;
};

// Flat key=value configuration: encoder + trainer + file paths.
struct RunConfig {
  EncoderConfig enc;
  TrainConfig train;
  std::string train_path, dev_path, test_path;
  std::string vocab_path, checkpoint_path, output_path;

  // Unknown keys or unparsable values throw std::invalid_argument naming
  // the offending key.
  void set(const std::string& key, const std::string& value);
  static RunConfig from_file(const std::string& path);

  std::string serialize_encoder() const;  // canonical text, digest input
};

EncoderConfig parse_encoder_config(const std::string& text);
std::uint64_t fnv1a(const std::string& text);

}  // namespace gdseg
