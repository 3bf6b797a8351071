#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdseg/config.hpp"
#include "gdseg/corpus.hpp"
#include "gdseg/model.hpp"
#include "gdseg/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDataMismatch = 3;
constexpr int kExitNumeric = 4;

gdseg::RunConfig load_run_config(const std::string& config_path,
                                 const std::vector<std::string>& sets) {
  gdseg::RunConfig rc;
  if (!config_path.empty()) rc = gdseg::RunConfig::from_file(config_path);
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return rc;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& output, long seed_override) {
  gdseg::RunConfig rc;
  try {
    rc = load_run_config(config_path, sets);
    if (seed_override >= 0) rc.train.seed = static_cast<std::uint64_t>(seed_override);
    rc.enc.validate();
    rc.train.validate();
    if (rc.train_path.empty())
      throw std::invalid_argument("config: train_path is required");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    auto all = gdseg::parse_corpus_file(rc.train_path);
    if (all.empty()) throw std::runtime_error("training corpus is empty");
    std::vector<gdseg::CharSequence> train_sents, dev_sents;
    if (!rc.dev_path.empty()) {
      train_sents = all;
      dev_sents = gdseg::parse_corpus_file(rc.dev_path);
    } else {
      // Last 10% of training sentences become the development set.
      const std::size_t dev_n = std::max<std::size_t>(1, all.size() / 10);
      train_sents.assign(all.begin(), all.end() - dev_n);
      dev_sents.assign(all.end() - dev_n, all.end());
      if (train_sents.empty()) train_sents = dev_sents;
    }
    gdseg::Vocabulary vocab =
        gdseg::Vocabulary::build(train_sents, rc.train.min_count);
    if (!rc.vocab_path.empty()) vocab.save(rc.vocab_path, rc.train.min_count);

    gdseg::SegModel model =
        gdseg::SegModel::create(rc.enc, vocab.size(), rc.train.seed);
    std::cout << "parameters: " << model.params.param_count() << "\n";

    const std::string ckpt =
        !output.empty() ? output
                        : (!rc.checkpoint_path.empty() ? rc.checkpoint_path : "");
    gdseg::TrainerState state;
    state.rng.seed(rc.train.seed);
    gdseg::TrainOptions opts;
    opts.checkpoint_out = ckpt;
    opts.metrics_log = rc.output_path.empty() ? "" : rc.output_path;

    const auto t0 = std::chrono::steady_clock::now();
    gdseg::TrainResult res =
        gdseg::train(model, state, train_sents, dev_sents, vocab, rc.train, opts);
    const double hours =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
        3600.0;
    // Final state alongside the best checkpoint, for resumption.
    if (!ckpt.empty()) {
      gdseg::save_checkpoint(ckpt + ".last", model, state, vocab.hash());
      if (res.best_f1 < 0)
        gdseg::save_checkpoint(ckpt, model, state, vocab.hash());
    }
    std::cout << "steps: " << res.steps_done << "\n";
    std::cout << "dev F1: " << (res.final_dev_f1 < 0 ? 0.0 : res.final_dev_f1) << "\n";
    std::cout << "best dev F1: " << (res.best_f1 < 0 ? 0.0 : res.best_f1) << "\n";
    std::cout << "training hours: " << hours << "\n";
    return kExitOk;
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.find("NaN") != std::string::npos) return kExitNumeric;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_segment(const std::string& checkpoint, const std::string& vocab_path,
                const std::string& input, const std::string& output) {
  try {
    gdseg::Vocabulary vocab = gdseg::Vocabulary::load(vocab_path);
    gdseg::SegModel model;
    try {
      model = gdseg::load_checkpoint(checkpoint, vocab.hash());
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      std::cerr << "error: " << msg << "\n";
      return msg.find("hash mismatch") != std::string::npos ? kExitDataMismatch
                                                            : kExitConfig;
    }
    std::ifstream in(input, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot open input file: " << input << "\n";
      return kExitConfig;
    }
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) {
      std::cerr << "error: cannot open output file: " << output << "\n";
      return kExitConfig;
    }
    std::string line;
    long long chars = 0;
    const auto t0 = std::chrono::steady_clock::now();
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string raw;
      for (char c : line)
        if (c != ' ' && c != '\t') raw += c;  // input may carry stray spacing
      if (raw.empty()) {
        out << "\n";
        continue;
      }
      const std::vector<char32_t> cps = gdseg::utf8_decode(raw);
      chars += static_cast<long long>(cps.size());
      std::vector<int> ids;
      ids.reserve(cps.size());
      for (char32_t cp : cps) ids.push_back(vocab.lookup(cp));
      const gdseg::Segmentation seg = model.segment_ids(ids);
      bool first = true;
      for (const auto& [s, e] : seg) {
        if (!first) out << ' ';
        first = false;
        out << gdseg::utf8_encode(
            std::vector<char32_t>(cps.begin() + s, cps.begin() + e));
      }
      out << "\n";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "segmented " << chars << " characters in " << secs << " s ("
              << (secs > 0 ? chars / secs : 0.0) << " chars/s)\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_eval(const std::string& pred_path, const std::string& gold_path) {
  try {
    auto pred = gdseg::parse_corpus_file(pred_path);
    auto gold = gdseg::parse_corpus_file(gold_path);
    if (pred.size() != gold.size()) {
      std::cerr << "error: sentence count mismatch at line "
                << std::min(pred.size(), gold.size()) + 1 << " (" << pred.size()
                << " vs " << gold.size() << " sentences)\n";
      return kExitDataMismatch;
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i].chars != gold[i].chars) {
        std::cerr << "error: sentence mismatch at line " << i + 1 << "\n";
        return kExitDataMismatch;
      }
    }
    std::vector<gdseg::Segmentation> ps, gs;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      ps.push_back(pred[i].gold);
      gs.push_back(gold[i].gold);
    }
    const gdseg::EvalReport r = gdseg::word_f1(ps, gs);
    std::cout << r.to_table() << r.to_kv();
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-masked directional Transformer word segmenter"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, vocab_path, input, output, pred_path, gold_path;
  std::vector<std::string> sets;
  long seed = -1;

  CLI::App* train = app.add_subcommand("train", "train a segmenter");
  train->add_option("--config", config_path, "flat key=value config file");
  train->add_option("--set", sets, "config override key=value (repeatable)");
  train->add_option("--output", output, "checkpoint output path");
  train->add_option("--seed", seed, "random seed override");

  CLI::App* segment = app.add_subcommand("segment", "segment raw text");
  segment->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  segment->add_option("--vocab", vocab_path, "vocabulary file")->required();
  segment->add_option("--input", input, "input text, one sentence per line")->required();
  segment->add_option("--output", output, "output path")->required();

  CLI::App* eval = app.add_subcommand("eval", "score predicted vs gold segmentation");
  eval->add_option("--pred", pred_path, "predicted segmentation file")->required();
  eval->add_option("--gold", gold_path, "gold segmentation file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (train->parsed()) return cmd_train(config_path, sets, output, seed);
  if (segment->parsed()) return cmd_segment(checkpoint, vocab_path, input, output);
  if (eval->parsed()) return cmd_eval(pred_path, gold_path);
  return kExitConfig;
}
