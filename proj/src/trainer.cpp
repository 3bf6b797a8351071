#include "gdseg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace gdseg {

double noam_lr(long step, int d_model, int warmup) {
  if (step < 1) throw std::invalid_argument("noam_lr: step must be >= 1");
  if (d_model < 1 || warmup < 1) throw std::invalid_argument("noam_lr: bad arguments");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

void adam_step(std::vector<std::pair<std::string, Tensor>>& params,
               AdamState& state, long step, const TrainConfig& tc, int d_model) {
  if (step < 1) throw std::invalid_argument("adam_step: step must be >= 1");
  const double lr = noam_lr(step, d_model, tc.warmup_steps);
  const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(step));
  for (auto& [name, p] : params) {
    auto mit = state.m.find(name);
    if (mit == state.m.end()) {
      mit = state.m.emplace(name, Tensor(p.shape, 0.0)).first;
      state.v.emplace(name, Tensor(p.shape, 0.0));
    }
    Tensor& m = mit->second;
    Tensor& v = state.v.at(name);
    std::vector<double> zeros;
    const std::vector<double>* g = p.grad.get();
    if (!g) {
      zeros.assign(p.size(), 0.0);
      g = &zeros;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.values()[i] = tc.beta1 * m.values()[i] + (1.0 - tc.beta1) * (*g)[i];
      v.values()[i] = tc.beta2 * v.values()[i] + (1.0 - tc.beta2) * (*g)[i] * (*g)[i];
      const double mhat = m.values()[i] / bc1;
      const double vhat = v.values()[i] / bc2;
      p.values()[i] -= lr * mhat / (std::sqrt(vhat) + tc.epsilon);
    }
  }
}

EvalReport evaluate(SegModel& model, const std::vector<CharSequence>& sents,
                    const Vocabulary& vocab) {
  std::vector<Segmentation> pred, gold;
  pred.reserve(sents.size());
  gold.reserve(sents.size());
  for (const CharSequence& cs : sents) {
    std::vector<int> ids;
    ids.reserve(cs.chars.size());
    for (char32_t cp : cs.chars) ids.push_back(vocab.lookup(cp));
    pred.push_back(model.segment_ids(ids));
    gold.push_back(cs.gold);
  }
  return word_f1(pred, gold);
}

namespace {

bool grads_finite(std::vector<std::pair<std::string, Tensor>>& params) {
  for (auto& [name, p] : params) {
    if (!p.grad) continue;
    for (double g : *p.grad)
      if (!std::isfinite(g)) return false;
  }
  return true;
}

void log_metrics(const std::string& path, std::uint64_t step, double lr,
                 double loss_main, double loss_aux, const EvalReport& dev,
                 double wall_ms) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  out << "step=" << step << " lr=" << lr << " loss_main=" << loss_main
      << " loss_aux=" << loss_aux << " dev_P=" << dev.precision
      << " dev_R=" << dev.recall << " dev_F1=" << dev.f1
      << " wall_ms=" << wall_ms << "\n";
}

}  // namespace

TrainResult train(SegModel& model, TrainerState& state,
                  const std::vector<CharSequence>& train_sents,
                  const std::vector<CharSequence>& dev_sents,
                  const Vocabulary& vocab, const TrainConfig& tc,
                  const TrainOptions& opts) {
  tc.validate();
  if (train_sents.empty()) throw std::invalid_argument("train: empty corpus");
  auto params = model.params.named_params();
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res;
  res.best_f1 = state.best_f1;

  std::uint64_t epoch = static_cast<std::uint64_t>(-1);
  std::vector<Batch> batches;
  auto batch_for = [&](std::uint64_t attempt) -> const Batch& {
    // Group count is stable across epochs; only the order reshuffles.
    if (batches.empty()) {
      batches = batch_by_tokens(train_sents, vocab, tc.token_budget, tc.seed);
      epoch = 0;
    }
    const std::uint64_t nb = batches.size();
    const std::uint64_t want_epoch = attempt / nb;
    if (want_epoch != epoch) {
      batches = batch_by_tokens(train_sents, vocab, tc.token_budget,
                                tc.seed + want_epoch);
      epoch = want_epoch;
    }
    return batches[attempt % nb];
  };

  double last_main = 0.0, last_aux = 0.0;
  while (static_cast<long>(state.step) < tc.max_steps) {
    const Batch& batch = batch_for(state.attempts);
    ++state.attempts;
    for (auto& [name, p] : params) p.zero_grad();
    BatchLoss bl = model.batch_loss(batch, state.rng, /*train=*/true);
    if (!std::isfinite(bl.total.item())) {
      std::ostringstream os;
      os << "train: NaN loss at step " << state.step + 1 << "; batch of "
         << batch.ids.size() << " sentences, n_max=" << batch.n_max;
      throw std::runtime_error(os.str());
    }
    Tensor loss = bl.total;
    backward(loss);
    if (!grads_finite(params)) {
      ++res.skipped_batches;
      if (!opts.quiet)
        std::cerr << "warning: non-finite gradient; skipping batch (attempt "
                  << state.attempts << ")\n";
      continue;
    }
    ++state.step;
    adam_step(params, state.opt, static_cast<long>(state.step), tc, model.cfg.d_model);
    last_main = bl.main_value;
    last_aux = bl.aux_value;

    const bool at_eval = state.step % static_cast<std::uint64_t>(tc.eval_every) == 0 ||
                         static_cast<long>(state.step) == tc.max_steps;
    if (at_eval && !dev_sents.empty()) {
      EvalReport dev = evaluate(model, dev_sents, vocab);
      const double wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      log_metrics(opts.metrics_log, state.step,
                  noam_lr(static_cast<long>(state.step), model.cfg.d_model, tc.warmup_steps),
                  last_main, last_aux, dev, wall_ms);
      res.final_dev_f1 = dev.f1;
      if (dev.f1 > state.best_f1) {
        state.best_f1 = dev.f1;
        if (!opts.checkpoint_out.empty())
          save_checkpoint(opts.checkpoint_out, model, state, vocab.hash());
      }
      if (!opts.quiet)
        std::cerr << "step " << state.step << " loss=" << last_main
                  << (model.cfg.use_highway_o ? "+" + std::to_string(last_aux) : "")
                  << " dev F1=" << dev.f1 << "\n";
      if (tc.target_f1 > 0.0 && dev.f1 >= tc.target_f1) break;
    }
  }
  res.steps_done = state.step;
  res.best_f1 = state.best_f1;
  return res;
}

namespace {

constexpr std::uint64_t kMagic = 0x47445347434B5031ull;  // "GDSGCKP1"
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  write_string(out, name);
  write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (int e : t.shape) write_u32(out, static_cast<std::uint32_t>(e));
  out.write(reinterpret_cast<const char*>(t.values().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}
void read_tensor_into(std::istream& in, Tensor& t, const std::string& name) {
  const std::uint32_t ndim = read_u32(in);
  std::vector<int> shape(ndim);
  for (auto& e : shape) e = static_cast<int>(read_u32(in));
  if (shape != t.shape)
    throw std::runtime_error("checkpoint: shape mismatch for tensor " + name);
  in.read(reinterpret_cast<char*>(t.values().data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
}

std::string serialize_config(const EncoderConfig& cfg) {
  RunConfig rc;
  rc.enc = cfg;
  return rc.serialize_encoder();
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream is(s);
  is >> rng;
  return rng;
}

}  // namespace

void save_checkpoint(const std::string& path, SegModel& model,
                     const TrainerState& state, std::uint64_t vocab_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const std::string cfg_text = serialize_config(model.cfg);
  write_u64(out, kMagic);
  write_u32(out, kVersion);
  write_u64(out, fnv1a(cfg_text));
  write_u64(out, vocab_hash);
  write_u32(out, static_cast<std::uint32_t>(model.params.embedding.rows()));
  write_u64(out, state.step);
  write_u64(out, state.attempts);
  write_string(out, rng_to_string(state.rng));
  write_string(out, cfg_text);

  auto params = model.params.named_params();
  std::uint32_t count = static_cast<std::uint32_t>(params.size());
  std::uint32_t moment_count = 0;
  for (auto& [name, p] : params)
    if (state.opt.m.count(name)) ++moment_count;
  write_u32(out, count);
  write_u32(out, moment_count);
  for (auto& [name, p] : params) write_tensor(out, name, p);
  for (auto& [name, p] : params) {
    auto it = state.opt.m.find(name);
    if (it == state.opt.m.end()) continue;
    write_tensor(out, "adam.m." + name, it->second);
    write_tensor(out, "adam.v." + name, state.opt.v.at(name));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

SegModel load_checkpoint(const std::string& path,
                         std::uint64_t expected_vocab_hash, TrainerState* state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  if (read_u64(in) != kMagic) throw std::runtime_error("not a checkpoint file: " + path);
  if (read_u32(in) != kVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  const std::uint64_t digest = read_u64(in);
  const std::uint64_t vocab_hash = read_u64(in);
  const int vocab_size = static_cast<int>(read_u32(in));
  const std::uint64_t step = read_u64(in);
  const std::uint64_t attempts = read_u64(in);
  const std::string rng_state = read_string(in);
  const std::string cfg_text = read_string(in);
  if (fnv1a(cfg_text) != digest)
    throw std::runtime_error("checkpoint: config digest mismatch in " + path);
  if (expected_vocab_hash != 0 && vocab_hash != expected_vocab_hash)
    throw std::runtime_error("checkpoint: vocabulary hash mismatch in " + path);

  SegModel model = SegModel::create(parse_encoder_config(cfg_text), vocab_size, 0);
  const std::uint32_t count = read_u32(in);
  const std::uint32_t moment_count = read_u32(in);
  auto params = model.params.named_params();
  if (count != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  std::unordered_map<std::string, Tensor> by_name(params.begin(), params.end());
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: unexpected tensor " + name);
    read_tensor_into(in, it->second, name);
  }
  TrainerState local;
  TrainerState& st = state ? *state : local;
  st.step = step;
  st.attempts = attempts;
  st.rng = rng_from_string(rng_state);
  for (std::uint32_t i = 0; i < 2 * moment_count; ++i) {
    const std::string name = read_string(in);
    const bool is_m = name.rfind("adam.m.", 0) == 0;
    const bool is_v = name.rfind("adam.v.", 0) == 0;
    if (!is_m && !is_v)
      throw std::runtime_error("checkpoint: unexpected optimizer tensor " + name);
    const std::string pname = name.substr(7);
    auto it = by_name.find(pname);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: moment for unknown parameter " + pname);
    Tensor t(it->second.shape, 0.0);
    read_tensor_into(in, t, name);
    (is_m ? st.opt.m : st.opt.v)[pname] = t;
  }
  return model;
}

}  // namespace gdseg
