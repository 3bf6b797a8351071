#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gdseg/config.hpp"
#include "gdseg/corpus.hpp"
#include "gdseg/decoder.hpp"
#include "gdseg/evalscore.hpp"
#include "gdseg/masks.hpp"
#include "gdseg/model.hpp"
#include "gdseg/trainer.hpp"

namespace py = pybind11;

namespace {

std::vector<std::vector<double>> to_rows(const std::vector<double>& flat, int n) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rows[i][j] = flat[static_cast<std::size_t>(i) * n + j];
  return rows;
}

std::vector<std::vector<bool>> to_bool_rows(const std::vector<uint8_t>& flat, int n) {
  std::vector<std::vector<bool>> rows(n, std::vector<bool>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rows[i][j] = flat[static_cast<std::size_t>(i) * n + j] != 0;
  return rows;
}

// Inference-only wrapper around a trained checkpoint plus its vocabulary.
class Segmenter {
 public:
  Segmenter(const std::string& checkpoint_path, const std::string& vocab_path)
      : vocab_(gdseg::Vocabulary::load(vocab_path)),
        model_(gdseg::load_checkpoint(checkpoint_path, vocab_.hash())) {}

  std::string segment(const std::string& line) const {
    std::string raw;
    for (char c : line)
      if (c != ' ' && c != '\t') raw += c;
    if (raw.empty()) return "";
    const std::vector<char32_t> cps = gdseg::utf8_decode(raw);
    std::vector<int> ids;
    ids.reserve(cps.size());
    for (char32_t cp : cps) ids.push_back(vocab_.lookup(cp));
    const gdseg::Segmentation seg =
        const_cast<gdseg::SegModel&>(model_).segment_ids(ids);
    std::string out;
    for (const auto& [s, e] : seg) {
      if (!out.empty()) out += ' ';
      out += gdseg::utf8_encode(std::vector<char32_t>(cps.begin() + s, cps.begin() + e));
    }
    return out;
  }

 private:
  gdseg::Vocabulary vocab_;
  gdseg::SegModel model_;
};

}  // namespace

PYBIND11_MODULE(_gdseg, m) {
  m.doc() = "Gaussian-masked directional Transformer segmenter core operations";

  m.def("gaussian_weight", &gdseg::gaussian_weight, py::arg("dis"), py::arg("sigma"),
        "Distance-decaying attention weight; 1.0 at distance 0.");

  m.def(
      "build_masks",
      [](int n, double sigma, int pad_count) {
        const gdseg::GaussianMaskSet ms = gdseg::build_masks(n, sigma, pad_count);
        py::dict d;
        d["g"] = to_rows(ms.g, n);
        d["keep_f"] = to_bool_rows(ms.keep_f, n);
        d["keep_b"] = to_bool_rows(ms.keep_b, n);
        d["pad_keep"] = to_bool_rows(ms.pad_keep, n);
        return d;
      },
      py::arg("n"), py::arg("sigma") = 2.0, py::arg("pad_count") = 0);

  m.def("noam_lr", &gdseg::noam_lr, py::arg("step"), py::arg("d_model"),
        py::arg("warmup"));

  m.def(
      "greedy_decode",
      [](const std::vector<std::vector<double>>& scores) {
        std::vector<int> labels;
        labels.reserve(scores.size());
        for (const auto& row : scores) {
          if (row.size() != 2) throw std::invalid_argument("scores rows must have 2 columns");
          labels.push_back(row[1] > row[0] ? 1 : 0);
        }
        return labels;
      },
      py::arg("scores"), "Per-gap argmax; ties resolve to no boundary.");

  m.def("labels_to_segmentation", &gdseg::labels_to_segmentation, py::arg("n"),
        py::arg("labels"));
  m.def("segmentation_to_labels", &gdseg::segmentation_to_labels, py::arg("seg"));

  m.def(
      "parse_line",
      [](const std::string& line) {
        std::istringstream in(line);
        const auto parsed = gdseg::parse_corpus(in);
        py::list out;
        for (const auto& cs : parsed) {
          py::dict d;
          d["text"] = gdseg::utf8_encode(cs.chars);
          d["spans"] = cs.gold;
          d["labels"] = cs.gold_labels();
          out.append(d);
        }
        return out;
      },
      py::arg("line"), "Parses whitespace-segmented sentences.");

  m.def(
      "word_f1",
      [](const std::vector<gdseg::Segmentation>& pred,
         const std::vector<gdseg::Segmentation>& gold) {
        const gdseg::EvalReport r = gdseg::word_f1(pred, gold);
        py::dict d;
        d["P"] = r.precision;
        d["R"] = r.recall;
        d["F1"] = r.f1;
        d["TP"] = r.true_positive;
        d["pred"] = r.predicted;
        d["gold"] = r.gold;
        return d;
      },
      py::arg("pred"), py::arg("gold"));

  m.def(
      "max_match",
      [](const std::string& text, const std::vector<std::string>& lexicon) {
        const std::vector<char32_t> chars = gdseg::utf8_decode(text);
        std::vector<std::vector<char32_t>> lex;
        lex.reserve(lexicon.size());
        for (const std::string& w : lexicon) lex.push_back(gdseg::utf8_decode(w));
        const gdseg::Segmentation seg = gdseg::max_match_segment(chars, lex);
        std::vector<std::string> words;
        for (const auto& [s, e] : seg)
          words.push_back(
              gdseg::utf8_encode(std::vector<char32_t>(chars.begin() + s, chars.begin() + e)));
        return words;
      },
      py::arg("text"), py::arg("lexicon"));

  py::class_<Segmenter>(m, "Segmenter")
      .def(py::init<const std::string&, const std::string&>(), py::arg("checkpoint"),
           py::arg("vocab"))
      .def("segment", &Segmenter::segment, py::arg("line"));
}
