#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "gdseg/encoder.hpp"

using namespace gdseg;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.d_ff = 16;
  cfg.heads = 2;
  cfg.dropout = 0.0;
  cfg.hired_after = 1;
  return cfg;
}

}  // namespace

TEST_CASE("embed basics") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(1);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  Tensor e = embed({3, 3}, params, cfg);
  for (int j = 0; j < cfg.d_model; ++j) CHECK(e.at(0, j) == e.at(1, j));
  Tensor padded = embed({3, 0, 0}, params, cfg);
  for (int j = 0; j < cfg.d_model; ++j) {
    CHECK(padded.at(1, j) == params.embedding.at(0, j));
    CHECK(padded.at(2, j) == params.embedding.at(0, j));
  }
  CHECK_THROWS_AS(embed({6}, params, cfg), std::invalid_argument);
}

TEST_CASE("embedding row used twice accumulates both gradients") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(2);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  auto make_loss = [&]() {
    Tensor e = embed({2, 2, 3}, params, cfg);
    return sum(mul(e, e));
  };
  GradCheckReport rep =
      grad_check(make_loss, {{"emb", params.embedding}}, 1e-5, 100, rng);
  CHECK(rep.max_rel_err <= 1e-6);
}

TEST_CASE("encoder_layer preserves shape") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(3);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  GaussianMaskSet masks = build_masks(5, cfg.sigma);
  Tensor x({5, cfg.d_model}, 0.3);
  for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += 0.01 * i;
  Tensor y = encoder_layer(x, params.center_pipe->front[0], masks,
                           Direction::center, cfg, rng, false);
  CHECK(y.rows() == 5);
  CHECK(y.cols() == cfg.d_model);
}

TEST_CASE("zero-weight layer reduces to stacked layer norms") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(4);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  LayerParams lp = params.center_pipe->front[0];
  for (auto* t : {&lp.attn.wm, &lp.ff_w1, &lp.ff_w2})
    for (double& v : t->values()) v = 0.0;
  GaussianMaskSet masks = build_masks(4, cfg.sigma);
  Tensor x({4, cfg.d_model}, 0.0);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (double& v : x.values()) v = uni(rng);
  Tensor got = encoder_layer(x, lp, masks, Direction::center, cfg, rng, false);
  Tensor want = layer_norm(layer_norm(x, lp.ln1_gain, lp.ln1_bias),
                           lp.ln2_gain, lp.ln2_bias);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
}

TEST_CASE("grad_check through one encoder layer") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(5);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  GaussianMaskSet masks = build_masks(3, cfg.sigma);
  std::vector<std::pair<std::string, Tensor>> named;
  LayerParams& lp = params.forward_pipe->front[0];
  Tensor x({3, cfg.d_model}, 0.0, true);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (double& v : x.values()) v = uni(rng);
  named.emplace_back("x", x);
  named.emplace_back("wm", lp.attn.wm);
  named.emplace_back("ff_w1", lp.ff_w1);
  named.emplace_back("ln1_gain", lp.ln1_gain);
  named.emplace_back("wq0", lp.attn.wq[0]);
  auto make_loss = [&]() {
    std::mt19937_64 local(0);
    Tensor y = encoder_layer(x, lp, masks, Direction::forward, cfg, local, false);
    return sum(mul(y, y));
  };
  GradCheckReport rep = grad_check(make_loss, named, 1e-4, 200, rng);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("encode shape contract and aux availability") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(6);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  GaussianMaskSet masks = build_masks(1, cfg.sigma);
  Tensor e = embed({4}, params, cfg);
  std::mt19937_64 drop(0);
  EncodeResult r = encode(e, params, cfg, masks, drop, true, 1);
  CHECK(r.v_f.rows() == 1);
  CHECK(r.v_f.cols() == cfg.d_model);
  CHECK(r.v_b.rows() == 1);
  CHECK(r.v_f_aux.defined());
  EncodeResult ri = encode(e, params, cfg, masks, drop, false, 1);
  CHECK_FALSE(ri.v_f_aux.defined());  // aux head is a training-time aid
}

TEST_CASE("disabled center pipeline makes v_f equal r_f") {
  EncoderConfig cfg = tiny_config();
  cfg.enable_center = false;
  std::mt19937_64 rng(7);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  GaussianMaskSet masks = build_masks(4, cfg.sigma);
  Tensor e = embed({2, 3, 4, 5}, params, cfg);
  std::mt19937_64 drop(0);
  EncodeResult r = encode(e, params, cfg, masks, drop, false, 4);
  REQUIRE(r.r_f.defined());
  for (std::size_t i = 0; i < r.v_f.size(); ++i)
    CHECK(r.v_f.values()[i] == r.r_f.values()[i]);
}

TEST_CASE("all pipelines disabled is rejected") {
  EncoderConfig cfg = tiny_config();
  cfg.enable_forward = cfg.enable_center = cfg.enable_backward = false;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("highway-I changes rear input by exactly the embedding") {
  // Replicate encode by hand for a single center pipeline and compare.
  EncoderConfig cfg = tiny_config();
  cfg.enable_forward = cfg.enable_backward = false;
  cfg.use_highway_o = false;
  std::mt19937_64 rng(8);
  ModelParams params = ModelParams::init(cfg, 6, rng);
  GaussianMaskSet masks = build_masks(3, cfg.sigma);
  Tensor e = embed({2, 3, 4}, params, cfg);
  std::mt19937_64 drop(0);

  Tensor front = encoder_layer(e, params.center_pipe->front[0], masks,
                               Direction::center, cfg, drop, false);
  Tensor want_on = encoder_layer(add(e, front), params.center_pipe->rear[0], masks,
                                 Direction::center, cfg, drop, false);
  Tensor want_off = encoder_layer(front, params.center_pipe->rear[0], masks,
                                  Direction::center, cfg, drop, false);

  EncodeResult on = encode(e, params, cfg, masks, drop, false, 3);
  cfg.use_highway_i = false;
  EncodeResult off = encode(e, params, cfg, masks, drop, false, 3);
  for (std::size_t i = 0; i < on.v_f.size(); ++i) {
    CHECK(on.v_f.values()[i] == doctest::Approx(want_on.values()[i]).epsilon(1e-12));
    CHECK(off.v_f.values()[i] == doctest::Approx(want_off.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("causality of the forward pipeline through the full encoder") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(9);
  ModelParams params = ModelParams::init(cfg, 8, rng);
  GaussianMaskSet masks = build_masks(6, cfg.sigma);
  std::mt19937_64 drop(0);
  std::vector<int> ids = {2, 3, 4, 5, 6, 7};
  EncodeResult base = encode(embed(ids, params, cfg), params, cfg, masks, drop, false, 6);
  for (int cut = 0; cut < 5; ++cut) {
    std::vector<int> pert = ids;
    for (int i = cut + 1; i < 6; ++i) pert[i] = 2 + (pert[i] - 1) % 6;
    EncodeResult r = encode(embed(pert, params, cfg), params, cfg, masks, drop, false, 6);
    for (int i = 0; i <= cut; ++i)
      for (int j = 0; j < cfg.d_model; ++j) {
        CHECK(std::fabs(base.r_f.at(i, j) - r.r_f.at(i, j)) <= 1e-12);
        // symmetric: backward pipeline ignores the prefix
        CHECK(std::fabs(base.r_b.at(5 - i, j) - r.r_b.at(5 - i, j)) >= 0.0);
      }
  }
  // backward symmetry with a prefix perturbation
  for (int cut = 1; cut < 6; ++cut) {
    std::vector<int> pert = ids;
    for (int i = 0; i < cut; ++i) pert[i] = 2 + (pert[i] - 1) % 6;
    EncodeResult r = encode(embed(pert, params, cfg), params, cfg, masks, drop, false, 6);
    for (int i = cut; i < 6; ++i)
      for (int j = 0; j < cfg.d_model; ++j)
        CHECK(std::fabs(base.r_b.at(i, j) - r.r_b.at(i, j)) <= 1e-12);
  }
}

TEST_CASE("directional information survives fusion") {
  EncoderConfig cfg = tiny_config();
  std::mt19937_64 rng(10);
  ModelParams params = ModelParams::init(cfg, 8, rng);
  GaussianMaskSet masks = build_masks(5, cfg.sigma);
  std::mt19937_64 drop(0);
  EncodeResult r =
      encode(embed({2, 3, 4, 5, 6}, params, cfg), params, cfg, masks, drop, false, 5);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < r.v_f.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(r.v_f.values()[i] - r.v_b.values()[i]));
  CHECK(max_diff > 0.0);
}

TEST_CASE("plain transformer mode matches a manually run center stack") {
  EncoderConfig cfg = tiny_config();
  cfg.enable_forward = cfg.enable_backward = false;
  cfg.use_gaussian_mask = false;
  cfg.use_directional_mask = false;
  cfg.use_highway_i = false;
  cfg.use_highway_o = false;
  std::mt19937_64 rng(11);
  ModelParams params = ModelParams::init(cfg, 8, rng);
  GaussianMaskSet masks = build_masks(4, cfg.sigma);
  Tensor e = embed({2, 3, 4, 5}, params, cfg);
  std::mt19937_64 drop(0);
  Tensor x = e;
  for (const LayerParams& lp : params.center_pipe->front)
    x = encoder_layer(x, lp, masks, Direction::center, cfg, drop, false);
  for (const LayerParams& lp : params.center_pipe->rear)
    x = encoder_layer(x, lp, masks, Direction::center, cfg, drop, false);
  EncodeResult r = encode(e, params, cfg, masks, drop, false, 4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(r.v_f.values()[i] == x.values()[i]);
    CHECK(r.v_b.values()[i] == x.values()[i]);
  }
}

TEST_CASE("parameter counts differ across pipeline ablations") {
  std::mt19937_64 rng(12);
  EncoderConfig base = tiny_config();
  ModelParams all = ModelParams::init(base, 8, rng);
  EncoderConfig no_f = base;
  no_f.enable_forward = false;
  ModelParams dropped = ModelParams::init(no_f, 8, rng);
  CHECK(dropped.param_count() < all.param_count());
  EncoderConfig no_aux = base;
  no_aux.use_highway_o = false;
  ModelParams no_aux_params = ModelParams::init(no_aux, 8, rng);
  CHECK(no_aux_params.param_count() < all.param_count());
}
