// End-to-end acceptance checks for the segmenter. Each criterion prints one
// PASS/FAIL line; the exit code is the number of failures.
//
// Usage: acceptance <toy_corpus.txt>
// Criterion 10 needs external data; it is skipped unless GDSEG_SIGHAN_TRAIN
// and GDSEG_SIGHAN_TEST point at whitespace-segmented corpus files.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdseg/attention.hpp"
#include "gdseg/corpus.hpp"
#include "gdseg/evalscore.hpp"
#include "gdseg/model.hpp"
#include "gdseg/scorer.hpp"
#include "gdseg/trainer.hpp"

using namespace gdseg;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail = "") {
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL")
            << " - " << what;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// --- criterion 1: full-model gradient check -------------------------------

void check_gradients(const std::vector<CharSequence>& sents) {
  const double t0 = now_seconds();
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.d_ff = 16;
  cfg.heads = 2;
  cfg.dropout = 0.0;  // the loss must be a deterministic function of params
  cfg.hired_after = 1;
  Vocabulary vocab = Vocabulary::build(sents);
  SegModel model = SegModel::create(cfg, vocab.size(), 123);
  std::vector<CharSequence> two(sents.begin(), sents.begin() + 2);
  Batch batch = batch_by_tokens(two, vocab, 1 << 20, 0).at(0);
  auto make_loss = [&]() {
    std::mt19937_64 rng(0);
    return model.batch_loss(batch, rng, true).total;
  };
  std::mt19937_64 rng(7);
  GradCheckReport rep =
      grad_check(make_loss, model.params.named_params(), 1e-4, 200, rng);
  const double secs = now_seconds() - t0;
  std::ostringstream detail;
  detail << "max rel err " << rep.max_rel_err << " at " << rep.worst_param << "["
         << rep.worst_index << "], " << secs << " s";
  report(1, rep.max_rel_err <= 1e-3 && secs < 60.0,
         "full-model finite-difference gradient check", detail.str());
}

// --- criterion 2: gaussian weight vs quadrature ---------------------------

// Simpson integration of the mass of N(0, sigma^2) below -dis, scaled by 2
// so that dis=0 gives exactly 1.
double quadrature_weight(double dis, double sigma) {
  const double lo = -dis - 40.0 * sigma, hi = -dis;
  const int steps = 200000;  // even
  const double h = (hi - lo) / steps;
  auto f = [&](double x) { return std::exp(-x * x / (2.0 * sigma * sigma)); };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < steps; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0 * std::sqrt(2.0 / (sigma * sigma * M_PI));
}

void check_gaussian_oracle() {
  double worst = 0.0;
  for (int d = 0; d <= 10; ++d)
    for (double sigma : {1.0, 2.0, 4.0})
      worst = std::max(worst, std::fabs(gaussian_weight(d, sigma) -
                                        quadrature_weight(d, sigma)));
  const bool unit_at_zero = gaussian_weight(0.0, 1.0) == 1.0 &&
                            gaussian_weight(0.0, 2.0) == 1.0;
  std::ostringstream detail;
  detail << "max |closed form - quadrature| = " << worst;
  report(2, worst <= 1e-6 && unit_at_zero, "gaussian weight matches quadrature",
         detail.str());
}

// --- criterion 3: reduction to standard attention -------------------------

Tensor standard_attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v,
                                 int dk) {
  const int n = q.rows(), d = q.cols();
  Tensor out({n, d}, 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n);
    double mx = -1e300;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += q.at(i, c) * k.at(j, c);
      row[j] = s / std::sqrt(static_cast<double>(dk));
      mx = std::max(mx, row[j]);
    }
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += row[j] = std::exp(row[j] - mx);
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < d; ++c) out.at(i, c) += row[j] / z * v.at(j, c);
  }
  return out;
}

void check_standard_reduction() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-1, 1);
  AttentionOptions opts;
  opts.use_gaussian = false;
  opts.use_directional = false;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 32), d = 4;
    auto rand_t = [&]() {
      Tensor t({n, d}, 0.0);
      for (double& x : t.values()) x = uni(rng);
      return t;
    };
    Tensor q = rand_t(), k = rand_t(), v = rand_t();
    GaussianMaskSet masks = build_masks(n, 2.0);
    Tensor got = ag_attention(q, k, v, masks, Direction::center, opts, d);
    Tensor want = standard_attention_oracle(q, k, v, d);
    for (std::size_t i = 0; i < got.size(); ++i)
      worst = std::max(worst, std::fabs(got.values()[i] - want.values()[i]));
  }
  std::ostringstream detail;
  detail << "max deviation " << worst << " over 100 trials";
  report(3, worst <= 1e-12, "masked path reduces to standard attention",
         detail.str());
}

// --- criterion 4: directional causality ------------------------------------

void check_causality() {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.d_ff = 16;
  cfg.heads = 2;
  cfg.dropout = 0.0;
  cfg.hired_after = 1;
  const int vocab_size = 30;
  std::mt19937_64 rng(13);
  ModelParams params = ModelParams::init(cfg, vocab_size, rng);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 10);
    GaussianMaskSet masks = build_masks(n, cfg.sigma);
    std::vector<int> ids(n);
    for (int& id : ids) id = 2 + static_cast<int>(rng() % (vocab_size - 2));
    const int cut = static_cast<int>(rng() % (n - 1));
    std::mt19937_64 drop(0);
    EncodeResult base =
        encode(embed(ids, params, cfg), params, cfg, masks, drop, false, n);

    std::vector<int> suffix_pert = ids;
    for (int i = cut + 1; i < n; ++i)
      suffix_pert[i] = 2 + static_cast<int>(rng() % (vocab_size - 2));
    EncodeResult rf =
        encode(embed(suffix_pert, params, cfg), params, cfg, masks, drop, false, n);
    for (int i = 0; i <= cut; ++i)
      for (int j = 0; j < cfg.d_model; ++j)
        worst = std::max(worst, std::fabs(base.r_f.at(i, j) - rf.r_f.at(i, j)));

    std::vector<int> prefix_pert = ids;
    for (int i = 0; i <= cut; ++i)
      prefix_pert[i] = 2 + static_cast<int>(rng() % (vocab_size - 2));
    EncodeResult rb =
        encode(embed(prefix_pert, params, cfg), params, cfg, masks, drop, false, n);
    for (int i = cut + 1; i < n; ++i)
      for (int j = 0; j < cfg.d_model; ++j)
        worst = std::max(worst, std::fabs(base.r_b.at(i, j) - rb.r_b.at(i, j)));
  }
  std::ostringstream detail;
  detail << "max leak " << worst << " over 100 trials";
  report(4, worst <= 1e-12, "directional pipelines are causal", detail.str());
}

// --- criterion 5: decode round trip ----------------------------------------

void check_decode_roundtrip() {
  bool ok = true;
  long long checked = 0;
  for (int n = 1; n <= 13 && ok; ++n) {
    const int gaps = n - 1;
    for (unsigned long mask = 0; mask < (1ul << gaps); ++mask, ++checked) {
      GapLabelVector labels(gaps);
      for (int g = 0; g < gaps; ++g) labels[g] = (mask >> g) & 1;
      if (segmentation_to_labels(labels_to_segmentation(n, labels)) != labels) {
        ok = false;
        break;
      }
    }
  }
  std::ostringstream detail;
  detail << checked << " label vectors, n <= 13";
  report(5, ok, "labels and segmentations are mutually inverse", detail.str());
}

// --- criterion 6: learning-rate schedule -----------------------------------

void check_lr_schedule() {
  const bool anchors = std::fabs(noam_lr(8000, 256, 8000) - 6.9877e-4) <= 1e-8 &&
                       std::fabs(noam_lr(1, 256, 8000) - 8.7346e-8) <= 1e-12;
  bool peak = true;
  const int w = 100;
  const double at_w = noam_lr(w, 64, w);
  for (long s = 1; s <= 5 * w; ++s)
    if (noam_lr(s, 64, w) > at_w + 1e-15) peak = false;
  std::ostringstream detail;
  detail << "lr(8000)=" << noam_lr(8000, 256, 8000)
         << ", lr(1)=" << noam_lr(1, 256, 8000);
  report(6, anchors && peak, "warmup schedule anchors and peak", detail.str());
}

// --- criterion 7: overfit oracle -------------------------------------------

EvalReport eval_main(SegModel& model, const std::vector<CharSequence>& sents,
                     const Vocabulary& vocab) {
  std::vector<Segmentation> pred, gold;
  for (const CharSequence& cs : sents) {
    std::vector<int> ids;
    for (char32_t c : cs.chars) ids.push_back(vocab.lookup(c));
    pred.push_back(model.segment_ids(ids));
    gold.push_back(cs.gold);
  }
  return word_f1(pred, gold);
}

EvalReport eval_aux(SegModel& model, const std::vector<CharSequence>& sents,
                    const Vocabulary& vocab) {
  std::vector<Segmentation> pred, gold;
  for (const CharSequence& cs : sents) {
    std::vector<int> ids;
    for (char32_t c : cs.chars) ids.push_back(vocab.lookup(c));
    const int n = static_cast<int>(ids.size());
    const GaussianMaskSet& masks = model.masks.get(n, model.cfg.sigma, 0);
    std::mt19937_64 rng(0);  // dropout is 0 in this config; train=true only
                             // forces the auxiliary head to be computed
    EncodeResult r =
        encode(embed(ids, model.params, model.cfg), model.params, model.cfg,
               masks, rng, true, n);
    Tensor scores = score_gaps(r.v_f_aux, r.v_b_aux, *model.params.aux_scorer);
    pred.push_back(labels_to_segmentation(n, greedy_decode(scores)));
    gold.push_back(cs.gold);
  }
  return word_f1(pred, gold);
}

void check_overfit(const std::vector<CharSequence>& sents) {
  const double t0 = now_seconds();
  EncoderConfig cfg;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  cfg.d_ff = 256;
  cfg.heads = 2;
  cfg.dropout = 0.0;
  cfg.hired_after = 1;
  Vocabulary vocab = Vocabulary::build(sents);
  SegModel model = SegModel::create(cfg, vocab.size(), 1);
  TrainConfig tc;
  tc.max_steps = 2000;
  tc.eval_every = 25;
  tc.target_f1 = 1.0;
  tc.warmup_steps = 400;
  tc.seed = 1;
  TrainerState state;
  state.rng.seed(1);
  TrainOptions opts;
  opts.quiet = true;
  TrainResult res = train(model, state, sents, sents, vocab, tc, opts);
  const EvalReport main_rep = eval_main(model, sents, vocab);
  const EvalReport aux_rep = eval_aux(model, sents, vocab);
  const double secs = now_seconds() - t0;
  std::ostringstream detail;
  detail << "train F1 " << main_rep.f1 << ", aux F1 " << aux_rep.f1 << ", "
         << res.steps_done << " steps, " << secs << " s";
  report(7,
         main_rep.f1 >= 0.99 && aux_rep.f1 >= 0.95 && res.steps_done <= 2000 &&
             secs < 600.0,
         "toy-corpus overfit with both heads", detail.str());
}

// --- criterion 8: loss formula ---------------------------------------------

void check_loss_formula() {
  Tensor s = Tensor::from_values({1, 2}, {0.0, 1.0});
  const double v1 = ce_loss(s, {1}, {1}).item();
  const double want1 = std::log(1.0 + std::exp(1.0)) - 1.0;
  bool ok = std::fabs(v1 - want1) <= 1e-9 && std::fabs(v1 - 0.313262) <= 1e-6;
  for (double c : {-2.0, 0.0, 3.5}) {
    Tensor sym = Tensor::from_values({1, 2}, {c, c});
    ok = ok && std::fabs(ce_loss(sym, {0}, {1}).item() - std::log(2.0)) <= 1e-12;
  }
  std::ostringstream detail;
  detail << "ce((0,1),p=1)=" << v1;
  report(8, ok, "cross-entropy anchor values", detail.str());
}

// --- criterion 9: ablation reachability -------------------------------------

void check_ablations(const std::vector<CharSequence>& sents) {
  struct Ablation {
    std::string name;
    std::function<void(EncoderConfig&)> apply;
  };
  const std::vector<Ablation> ablations = {
      {"-gaussian_mask", [](EncoderConfig& c) { c.use_gaussian_mask = false; }},
      {"-directional_mask", [](EncoderConfig& c) { c.use_directional_mask = false; }},
      {"plain_transformer",
       [](EncoderConfig& c) {
         c.use_gaussian_mask = c.use_directional_mask = false;
         c.use_highway_i = c.use_highway_o = false;
         c.enable_forward = c.enable_backward = false;
         c.use_positional_encoding = true;
       }},
      {"-highway_i", [](EncoderConfig& c) { c.use_highway_i = false; }},
      {"-highway_o", [](EncoderConfig& c) { c.use_highway_o = false; }},
      {"-both_highways",
       [](EncoderConfig& c) { c.use_highway_i = c.use_highway_o = false; }},
      {"-forward_encoder", [](EncoderConfig& c) { c.enable_forward = false; }},
      {"-center_encoder", [](EncoderConfig& c) { c.enable_center = false; }},
      {"-backward_encoder", [](EncoderConfig& c) { c.enable_backward = false; }},
  };

  Vocabulary vocab = Vocabulary::build(sents);
  bool all_ran = true;
  std::vector<std::size_t> counts;
  for (const Ablation& ab : ablations) {
    EncoderConfig cfg;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.d_ff = 32;
    cfg.heads = 2;
    cfg.hired_after = 1;
    ab.apply(cfg);
    try {
      cfg.validate();
      SegModel model = SegModel::create(cfg, vocab.size(), 3);
      counts.push_back(model.params.param_count());
      std::cout << "  ablation " << ab.name
                << ": parameters=" << counts.back() << std::endl;
      TrainConfig tc;
      tc.max_steps = 2;
      tc.eval_every = 1;
      TrainerState state;
      state.rng.seed(3);
      TrainOptions opts;
      opts.quiet = true;
      train(model, state, sents, sents, vocab, tc, opts);
      std::vector<int> ids;
      for (char32_t c : sents[0].chars) ids.push_back(vocab.lookup(c));
      (void)model.segment_ids(ids);
    } catch (const std::exception& e) {
      std::cout << "  ablation " << ab.name << ": ERROR " << e.what() << std::endl;
      all_ran = false;
    }
  }
  // Mask and Highway-I ablations change no parameter shapes, so counts can
  // only distinguish configurations that add or remove parameters. Check
  // that those that must differ do, and that every run logged its count.
  const std::set<std::size_t> distinct(counts.begin(), counts.end());
  const bool counts_ok = counts.size() == ablations.size() && distinct.size() >= 3;
  std::ostringstream detail;
  detail << counts.size() << "/9 ran, " << distinct.size()
         << " distinct parameter counts";
  report(9, all_ran && counts_ok, "all nine ablation configurations run",
         detail.str());
}

// --- criterion 10: optional external-data smoke -----------------------------

void check_external_smoke() {
  const char* train_path = std::getenv("GDSEG_SIGHAN_TRAIN");
  const char* test_path = std::getenv("GDSEG_SIGHAN_TEST");
  if (!train_path || !test_path) {
    std::cout << "criterion 10: SKIP - external corpus smoke "
                 "(set GDSEG_SIGHAN_TRAIN and GDSEG_SIGHAN_TEST to enable)"
              << std::endl;
    return;
  }
  try {
    auto train_sents = parse_corpus_file(train_path);
    auto test_sents = parse_corpus_file(test_path);
    if (train_sents.size() < 5000)
      throw std::runtime_error("external training corpus has fewer than 5000 sentences");
    Vocabulary vocab = Vocabulary::build(train_sents, 2);

    // Baseline: greedy maximum matching with the training lexicon.
    std::vector<std::vector<char32_t>> lexicon;
    {
      std::set<std::vector<char32_t>> words;
      for (const CharSequence& cs : train_sents)
        for (const auto& [s, e] : cs.gold)
          words.insert(std::vector<char32_t>(cs.chars.begin() + s,
                                             cs.chars.begin() + e));
      lexicon.assign(words.begin(), words.end());
    }
    std::vector<Segmentation> base_pred, gold;
    for (const CharSequence& cs : test_sents) {
      base_pred.push_back(max_match_segment(cs.chars, lexicon));
      gold.push_back(cs.gold);
    }
    const double baseline = word_f1(base_pred, gold).f1;

    EncoderConfig cfg;
    cfg.d_model = 128;
    cfg.n_layers = 4;
    cfg.d_ff = 512;
    cfg.heads = 4;
    SegModel model = SegModel::create(cfg, vocab.size(), 1);
    TrainConfig tc;
    tc.max_steps = 20000;
    tc.eval_every = 1000;
    tc.min_count = 2;
    TrainerState state;
    state.rng.seed(1);
    TrainOptions opts;
    opts.quiet = true;
    train(model, state, train_sents, test_sents, vocab, tc, opts);
    const double f1 = eval_main(model, test_sents, vocab).f1;
    std::ostringstream detail;
    detail << "model F1 " << f1 << " vs max-match baseline " << baseline;
    report(10, f1 > baseline, "external corpus beats max-match baseline",
           detail.str());
  } catch (const std::exception& e) {
    report(10, false, "external corpus smoke", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <toy_corpus.txt>" << std::endl;
    return 64;
  }
  std::vector<CharSequence> sents;
  try {
    sents = parse_corpus_file(argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "cannot load corpus: " << e.what() << std::endl;
    return 64;
  }

  check_gradients(sents);
  check_gaussian_oracle();
  check_standard_reduction();
  check_causality();
  check_decode_roundtrip();
  check_lr_schedule();
  check_overfit(sents);
  check_loss_formula();
  check_ablations(sents);
  check_external_smoke();

  std::cout << (g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL")
            << " (" << g_failures << " failing)" << std::endl;
  return g_failures;
}
