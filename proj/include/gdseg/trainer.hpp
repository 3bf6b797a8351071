#pragma once

#include <random>
#include <string>
#include <unordered_map>

#include "gdseg/config.hpp"
#include "gdseg/corpus.hpp"
#include "gdseg/evalscore.hpp"
#include "gdseg/model.hpp"

namespace gdseg {

// Warmup-then-decay schedule: d^-0.5 * min(step^-0.5, step * warmup^-1.5).
double noam_lr(long step, int d_model, int warmup);

struct AdamState {
  std::unordered_map<std::string, Tensor> m, v;  // first/second moments
};

// One bias-corrected Adam update over all named parameters, learning rate
// from noam_lr. Gradients must be finite (caller checks).
void adam_step(std::vector<std::pair<std::string, Tensor>>& params,
               AdamState& state, long step, const TrainConfig& tc, int d_model);

struct TrainerState {
  AdamState opt;
  std::uint64_t step = 0;      // successful updates
  std::uint64_t attempts = 0;  // batches consumed (skips included)
  std::mt19937_64 rng{0};
  double best_f1 = -1.0;
};

struct TrainOptions {
  std::string checkpoint_out;  // best-F1 checkpoint ("" = none)
  std::string metrics_log;     // append-only eval lines ("" = none)
  bool quiet = false;
};

struct TrainResult {
  std::uint64_t steps_done = 0;
  double best_f1 = -1.0;
  double final_dev_f1 = -1.0;
  long long skipped_batches = 0;
};

EvalReport evaluate(SegModel& model, const std::vector<CharSequence>& sents,
                    const Vocabulary& vocab);

// Runs up to tc.max_steps updates (resuming from state.step). Deterministic
// given seeds: batch order depends only on (tc.seed, epoch); dropout draws
// from state.rng. Aborts with a diagnostic on NaN loss; skips a batch on
// non-finite gradients without advancing the step counter.
TrainResult train(SegModel& model, TrainerState& state,
                  const std::vector<CharSequence>& train_sents,
                  const std::vector<CharSequence>& dev_sents,
                  const Vocabulary& vocab, const TrainConfig& tc,
                  const TrainOptions& opts);

// Versioned binary checkpoint: header (magic, version, config digest,
// vocab hash, vocab size, step, attempts, rng state, config text) then
// named tensors with shape prefixes, little-endian 64-bit reals.
void save_checkpoint(const std::string& path, SegModel& model,
                     const TrainerState& state, std::uint64_t vocab_hash);

// Restores the model (and optimizer state when state != nullptr). Refuses
// a mismatched vocabulary hash unless expected_vocab_hash is 0.
SegModel load_checkpoint(const std::string& path,
                         std::uint64_t expected_vocab_hash,
                         TrainerState* state = nullptr);

}  // namespace gdseg
