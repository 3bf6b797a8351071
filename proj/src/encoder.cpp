#include "gdseg/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "gdseg/decoder.hpp"

namespace gdseg {

void EncoderConfig::validate() const {
  if (d_model < 1 || n_layers < 2 || d_ff < 1)
    throw std::invalid_argument("config: bad dimensions");
  if (heads < 1 || d_model % heads != 0)
    throw std::invalid_argument("config: d_model not divisible by heads");
  if (sigma <= 0.0) throw std::invalid_argument("config: sigma must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("config: dropout must be in [0,1)");
  const int h = effective_hired_after();
  if (h < 1 || h >= n_layers)
    throw std::invalid_argument("config: hired_after must be in [1, n_layers)");
  if (!enable_forward && !enable_center && !enable_backward)
    throw std::invalid_argument("config: all pipelines disabled");
}

AttentionOptions EncoderConfig::attention_options() const {
  AttentionOptions o;
  o.use_gaussian = use_gaussian_mask;
  o.use_directional = use_directional_mask;
  o.scale_by_head_dim = scale_by_head_dim;
  return o;
}

namespace {

Tensor uniform_init(std::vector<int> shape, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> uni(-bound, bound);
  Tensor t(std::move(shape), 0.0, true);
  for (double& v : t.values()) v = uni(rng);
  return t;
}

LayerParams init_layer(const EncoderConfig& cfg, std::mt19937_64& rng) {
  LayerParams lp;
  const int d = cfg.d_model;
  const int dh = d / cfg.heads;
  lp.attn.heads = cfg.heads;
  lp.attn.d_model = d;
  for (int h = 0; h < cfg.heads; ++h) {
    lp.attn.wq.push_back(uniform_init({d, dh}, d, rng));
    lp.attn.wk.push_back(uniform_init({d, dh}, d, rng));
    lp.attn.wv.push_back(uniform_init({d, dh}, d, rng));
  }
  lp.attn.wm = uniform_init({d, d}, d, rng);
  lp.ff_w1 = uniform_init({d, cfg.d_ff}, d, rng);
  lp.ff_b1 = Tensor({cfg.d_ff}, 0.0, true);
  lp.ff_w2 = uniform_init({cfg.d_ff, d}, cfg.d_ff, rng);
  lp.ff_b2 = Tensor({d}, 0.0, true);
  lp.ln1_gain = Tensor({d}, 1.0, true);
  lp.ln1_bias = Tensor({d}, 0.0, true);
  lp.ln2_gain = Tensor({d}, 1.0, true);
  lp.ln2_bias = Tensor({d}, 0.0, true);
  return lp;
}

PipelineParams init_pipeline(const EncoderConfig& cfg, std::mt19937_64& rng) {
  PipelineParams pp;
  const int h = cfg.effective_hired_after();
  for (int i = 0; i < h; ++i) pp.front.push_back(init_layer(cfg, rng));
  for (int i = h; i < cfg.n_layers; ++i) pp.rear.push_back(init_layer(cfg, rng));
  return pp;
}

BiaffineParams init_biaffine(const EncoderConfig& cfg, std::mt19937_64& rng) {
  BiaffineParams bp;
  bp.d = cfg.d_model;
  for (int j = 0; j < kNumGapLabels; ++j)
    bp.w.push_back(Tensor({cfg.d_model, cfg.d_model}, 0.0, true));
  bp.u = uniform_init({kNumGapLabels, 2 * cfg.d_model}, 2 * cfg.d_model, rng);
  bp.b = Tensor({kNumGapLabels}, 0.0, true);
  return bp;
}

void visit_layer(const std::string& prefix, LayerParams& lp,
                 const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t h = 0; h < lp.attn.wq.size(); ++h) {
    fn(prefix + ".wq." + std::to_string(h), lp.attn.wq[h]);
    fn(prefix + ".wk." + std::to_string(h), lp.attn.wk[h]);
    fn(prefix + ".wv." + std::to_string(h), lp.attn.wv[h]);
  }
  fn(prefix + ".wm", lp.attn.wm);
  fn(prefix + ".ff_w1", lp.ff_w1);
  fn(prefix + ".ff_b1", lp.ff_b1);
  fn(prefix + ".ff_w2", lp.ff_w2);
  fn(prefix + ".ff_b2", lp.ff_b2);
  fn(prefix + ".ln1_gain", lp.ln1_gain);
  fn(prefix + ".ln1_bias", lp.ln1_bias);
  fn(prefix + ".ln2_gain", lp.ln2_gain);
  fn(prefix + ".ln2_bias", lp.ln2_bias);
}

void visit_pipeline(const std::string& prefix, PipelineParams& pp,
                    const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t i = 0; i < pp.front.size(); ++i)
    visit_layer(prefix + ".front." + std::to_string(i), pp.front[i], fn);
  for (std::size_t i = 0; i < pp.rear.size(); ++i)
    visit_layer(prefix + ".rear." + std::to_string(i), pp.rear[i], fn);
}

void visit_biaffine(const std::string& prefix, BiaffineParams& bp,
                    const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t j = 0; j < bp.w.size(); ++j)
    fn(prefix + ".w." + std::to_string(j), bp.w[j]);
  fn(prefix + ".u", bp.u);
  fn(prefix + ".b", bp.b);
}

}  // namespace

ModelParams ModelParams::init(const EncoderConfig& cfg, int vocab_size,
                              std::mt19937_64& rng) {
  cfg.validate();
  if (vocab_size < 2) throw std::invalid_argument("vocab must hold PAD and UNK");
  ModelParams mp;
  mp.embedding = uniform_init({vocab_size, cfg.d_model}, cfg.d_model, rng);
  if (cfg.enable_forward) mp.forward_pipe = init_pipeline(cfg, rng);
  if (cfg.enable_center) mp.center_pipe = init_pipeline(cfg, rng);
  if (cfg.enable_backward) mp.backward_pipe = init_pipeline(cfg, rng);
  mp.main_scorer = init_biaffine(cfg, rng);
  if (cfg.use_highway_o || cfg.use_word_sum) mp.aux_scorer = init_biaffine(cfg, rng);
  return mp;
}

void ModelParams::for_each_param(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("embedding", embedding);
  if (forward_pipe) visit_pipeline("f", *forward_pipe, fn);
  if (center_pipe) visit_pipeline("c", *center_pipe, fn);
  if (backward_pipe) visit_pipeline("b", *backward_pipe, fn);
  visit_biaffine("main", main_scorer, fn);
  if (aux_scorer) visit_biaffine("aux", *aux_scorer, fn);
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_params() {
  std::vector<std::pair<std::string, Tensor>> out;
  for_each_param([&](const std::string& n, Tensor& t) { out.emplace_back(n, t); });
  return out;
}

std::size_t ModelParams::param_count() {
  std::size_t n = 0;
  for_each_param([&](const std::string&, Tensor& t) { n += t.size(); });
  return n;
}

Tensor embed(const std::vector<int>& char_ids, const ModelParams& params,
             const EncoderConfig& cfg) {
  Tensor e = gather_rows(params.embedding, char_ids);
  if (cfg.use_positional_encoding) {
    const int n = static_cast<int>(char_ids.size());
    const int d = cfg.d_model;
    std::vector<double> pe(static_cast<std::size_t>(n) * d);
    for (int pos = 0; pos < n; ++pos)
      for (int j = 0; j < d; ++j) {
        const double angle = pos / std::pow(10000.0, (2.0 * (j / 2)) / d);
        pe[static_cast<std::size_t>(pos) * d + j] =
            (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
    e = add(e, Tensor::from_values({n, d}, std::move(pe)));
  }
  return e;
}

Tensor encoder_layer(const Tensor& x, const LayerParams& layer,
                     const GaussianMaskSet& masks, Direction dir,
                     const EncoderConfig& cfg, std::mt19937_64& rng, bool train) {
  Tensor attn = gd_multi_head(x, layer.attn, masks, dir, cfg.attention_options());
  Tensor y1 = layer_norm(add(x, dropout(attn, cfg.dropout, rng, train)),
                         layer.ln1_gain, layer.ln1_bias);
  Tensor hidden = relu(add_row_bias(matmul(y1, layer.ff_w1), layer.ff_b1));
  Tensor ff = add_row_bias(matmul(hidden, layer.ff_w2), layer.ff_b2);
  Tensor y2 = layer_norm(add(y1, dropout(ff, cfg.dropout, rng, train)),
                         layer.ln2_gain, layer.ln2_bias);
  return y2;
}

namespace {

Tensor run_layers(Tensor x, const std::vector<LayerParams>& layers,
                  const GaussianMaskSet& masks, Direction dir,
                  const EncoderConfig& cfg, std::mt19937_64& rng, bool train) {
  for (const LayerParams& lp : layers)
    x = encoder_layer(x, lp, masks, dir, cfg, rng, train);
  return x;
}

Tensor fuse(const Tensor& a, const Tensor& b, int n, int d) {
  if (a.defined() && b.defined()) return add(a, b);
  if (a.defined()) return a;
  if (b.defined()) return b;
  return Tensor({n, d}, 0.0);
}

// Word-sum aggregation matrix: identity plus same-word incidence over the
// first true_len positions, so each real row gains the sum of its word.
Tensor word_sum_matrix(const Segmentation& seg, int n) {
  Tensor a({n, n}, 0.0);
  for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (const auto& [s, e] : seg)
    for (int i = s; i < e; ++i)
      for (int j = s; j < e; ++j) a.at(i, j) += 1.0;
  return a;
}

}  // namespace

EncodeResult encode(const Tensor& e, const ModelParams& params,
                    const EncoderConfig& cfg, const GaussianMaskSet& masks,
                    std::mt19937_64& rng, bool train, int true_len) {
  cfg.validate();
  const int n = e.rows(), d = e.cols();
  if (masks.length != n) throw std::invalid_argument("encode: mask length mismatch");
  if (true_len < 1 || true_len > n)
    throw std::invalid_argument("encode: bad true_len");

  struct Pipe {
    const PipelineParams* pp;
    Direction dir;
    Tensor front_out, rear_out;
  };
  std::vector<Pipe> pipes;
  if (params.forward_pipe) pipes.push_back({&*params.forward_pipe, Direction::forward, {}, {}});
  if (params.center_pipe) pipes.push_back({&*params.center_pipe, Direction::center, {}, {}});
  if (params.backward_pipe) pipes.push_back({&*params.backward_pipe, Direction::backward, {}, {}});
  if (pipes.empty()) throw std::invalid_argument("encode: all pipelines disabled");

  for (Pipe& p : pipes)
    p.front_out = run_layers(e, p.pp->front, masks, p.dir, cfg, rng, train);

  EncodeResult res;
  const bool need_aux = (cfg.use_highway_o && train) || cfg.use_word_sum;
  if (need_aux) {
    Tensor rf_aux, rc_aux, rb_aux;
    for (Pipe& p : pipes) {
      if (p.dir == Direction::forward) rf_aux = p.front_out;
      else if (p.dir == Direction::center) rc_aux = p.front_out;
      else rb_aux = p.front_out;
    }
    res.v_f_aux = fuse(rf_aux, rc_aux, n, d);
    res.v_b_aux = fuse(rb_aux, rc_aux, n, d);
  }

  Tensor word_sum_m;
  if (cfg.use_word_sum && params.aux_scorer && true_len > 1) {
    Tensor vf_real = slice_rows(res.v_f_aux, 0, true_len);
    Tensor vb_real = slice_rows(res.v_b_aux, 0, true_len);
    Tensor aux_scores = score_gaps(vf_real, vb_real, *params.aux_scorer);
    Segmentation seg = labels_to_segmentation(true_len, greedy_decode(aux_scores));
    word_sum_m = word_sum_matrix(seg, n);
  }

  for (Pipe& p : pipes) {
    Tensor rear_in = cfg.use_highway_i ? add(e, p.front_out) : p.front_out;
    if (word_sum_m.defined()) rear_in = matmul(word_sum_m, rear_in);
    p.rear_out = run_layers(rear_in, p.pp->rear, masks, p.dir, cfg, rng, train);
  }

  Tensor rf, rc, rb;
  for (Pipe& p : pipes) {
    if (p.dir == Direction::forward) rf = p.rear_out;
    else if (p.dir == Direction::center) rc = p.rear_out;
    else rb = p.rear_out;
  }
  res.r_f = rf;
  res.r_c = rc;
  res.r_b = rb;
  res.v_f = fuse(rf, rc, n, d);
  res.v_b = fuse(rb, rc, n, d);
  return res;
}

}  // namespace gdseg
