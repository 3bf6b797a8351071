#include "gdseg/model.hpp"

#include <stdexcept>

#include "gdseg/decoder.hpp"

namespace gdseg {

SegModel SegModel::create(const EncoderConfig& cfg, int vocab_size,
                          std::uint64_t seed) {
  cfg.validate();
  SegModel m;
  m.cfg = cfg;
  std::mt19937_64 rng(seed);
  m.params = ModelParams::init(cfg, vocab_size, rng);
  return m;
}

BatchLoss SegModel::batch_loss(const Batch& batch, std::mt19937_64& rng, bool train) {
  if (batch.ids.empty()) throw std::invalid_argument("batch_loss: empty batch");
  const int n = batch.n_max;
  std::vector<Tensor> mains, auxes;
  BatchLoss out;
  const bool want_aux = cfg.use_highway_o && train;
  for (std::size_t s = 0; s < batch.ids.size(); ++s) {
    const int len = batch.lengths[s];
    const GaussianMaskSet& m = masks.get(n, cfg.sigma, n - len);
    Tensor e = embed(batch.ids[s], params, cfg);
    EncodeResult enc = encode(e, params, cfg, m, rng, train, len);

    // Gold labels padded to the batch gap count; pad gaps are masked out.
    std::vector<int> gold(std::max(n - 1, 0), 0);
    for (std::size_t i = 0; i < batch.gold[s].size(); ++i) gold[i] = batch.gold[s][i];

    Tensor main_scores = score_gaps(enc.v_f, enc.v_b, params.main_scorer);
    bool warned = false;
    mains.push_back(ce_loss(main_scores, gold, batch.valid[s], &warned));
    if (warned) out.empty_gap_warning = true;
    if (want_aux) {
      if (!params.aux_scorer)
        throw std::invalid_argument("batch_loss: use_highway_o without aux scorer");
      Tensor aux_scores = score_gaps(enc.v_f_aux, enc.v_b_aux, *params.aux_scorer);
      auxes.push_back(ce_loss(aux_scores, gold, batch.valid[s], nullptr));
    }
  }
  auto mean_of = [](std::vector<Tensor>& parts) {
    Tensor acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return scale(acc, 1.0 / static_cast<double>(parts.size()));
  };
  Tensor main_loss = mean_of(mains);
  out.main_value = main_loss.item();
  if (want_aux) {
    Tensor aux_loss = mean_of(auxes);
    out.aux_value = aux_loss.item();
    out.total = total_loss(main_loss, aux_loss, true);
  } else {
    out.total = main_loss;
  }
  return out;
}

GapLabelVector SegModel::predict(const std::vector<int>& char_ids) {
  if (char_ids.empty()) throw std::invalid_argument("predict: empty sentence");
  const int n = static_cast<int>(char_ids.size());
  const GaussianMaskSet& m = masks.get(n, cfg.sigma, 0);
  std::mt19937_64 rng(0);  // dropout off; never drawn from
  Tensor e = embed(char_ids, params, cfg);
  EncodeResult enc = encode(e, params, cfg, m, rng, /*train=*/false, n);
  Tensor scores = score_gaps(enc.v_f, enc.v_b, params.main_scorer);
  return greedy_decode(scores);
}

Segmentation SegModel::segment_ids(const std::vector<int>& char_ids) {
  return labels_to_segmentation(static_cast<int>(char_ids.size()), predict(char_ids));
}

}  // namespace gdseg
