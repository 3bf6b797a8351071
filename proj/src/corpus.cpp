#include "gdseg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gdseg {

std::vector<char32_t> utf8_decode(const std::string& s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = s[i];
    char32_t cp;
    int extra;
    if (b0 < 0x80) {
      cp = b0;
      extra = 0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      throw std::invalid_argument("invalid UTF-8 lead byte");
    }
    if (i + extra >= s.size()) throw std::invalid_argument("truncated UTF-8 sequence");
    for (int k = 1; k <= extra; ++k) {
      const unsigned char b = s[i + k];
      if ((b & 0xC0) != 0x80) throw std::invalid_argument("invalid UTF-8 continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings and surrogates.
    static constexpr char32_t mins[4] = {0, 0x80, 0x800, 0x10000};
    if (cp < mins[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      throw std::invalid_argument("invalid UTF-8 codepoint");
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

std::vector<CharSequence> parse_corpus(std::istream& in) {
  std::vector<CharSequence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Split on runs of spaces/tabs.
    std::vector<std::string> words;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      if (end > pos) words.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    if (words.empty()) continue;
    CharSequence cs;
    int start = 0;
    for (const std::string& w : words) {
      std::vector<char32_t> cps;
      try {
        cps = utf8_decode(w);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
      }
      cs.chars.insert(cs.chars.end(), cps.begin(), cps.end());
      cs.gold.emplace_back(start, start + static_cast<int>(cps.size()));
      start += static_cast<int>(cps.size());
    }
    out.push_back(std::move(cs));
  }
  return out;
}

std::vector<CharSequence> parse_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return parse_corpus(in);
}

Vocabulary Vocabulary::build(const std::vector<CharSequence>& train, int min_count) {
  if (train.empty()) throw std::invalid_argument("build_vocab: empty training set");
  Vocabulary v;
  std::unordered_map<char32_t, int> counts;
  std::vector<char32_t> order;  // first-occurrence order
  for (const CharSequence& cs : train)
    for (char32_t cp : cs.chars)
      if (++counts[cp] == 1) order.push_back(cp);
  for (char32_t cp : order) {
    if (counts[cp] < min_count) continue;
    v.ids_[cp] = static_cast<int>(v.chars_.size()) + 2;
    v.chars_.push_back(cp);
  }
  return v;
}

int Vocabulary::lookup(char32_t cp) const {
  auto it = ids_.find(cp);
  return it == ids_.end() ? kUnkId : it->second;
}

std::uint64_t Vocabulary::hash() const {
  // FNV-1a over the ordered codepoint list.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
      h ^= (v >> (8 * k)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint32_t>(chars_.size()));
  for (char32_t cp : chars_) mix(cp);
  return h;
}

void Vocabulary::save(const std::string& path, int min_count) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  out << "gdseg-vocab\n";
  out << "format_version 1\n";
  out << "min_count " << min_count << "\n";
  out << "size " << chars_.size() << "\n";
  for (char32_t cp : chars_) out << static_cast<std::uint32_t>(cp) << "\n";
  if (!out) throw std::runtime_error("failed writing vocabulary file: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  std::string magic, key;
  int version = 0, min_count = 0;
  std::size_t size = 0;
  std::getline(in, magic);
  if (magic != "gdseg-vocab") throw std::runtime_error("not a vocabulary file: " + path);
  in >> key >> version;
  if (key != "format_version" || version != 1)
    throw std::runtime_error("unsupported vocabulary version in " + path);
  in >> key >> min_count;
  in >> key >> size;
  Vocabulary v;
  for (std::size_t i = 0; i < size; ++i) {
    std::uint32_t cp;
    if (!(in >> cp)) throw std::runtime_error("truncated vocabulary file: " + path);
    v.ids_[static_cast<char32_t>(cp)] = static_cast<int>(v.chars_.size()) + 2;
    v.chars_.push_back(static_cast<char32_t>(cp));
  }
  return v;
}

std::vector<Batch> batch_by_tokens(const std::vector<CharSequence>& sentences,
                                   const Vocabulary& vocab, int budget,
                                   std::uint64_t shuffle_seed) {
  if (budget < 1) throw std::invalid_argument("batch_by_tokens: budget must be >= 1");
  std::vector<std::size_t> idx(sentences.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return sentences[a].chars.size() > sentences[b].chars.size();
  });

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> cur;
  int cur_tokens = 0;
  for (std::size_t si : idx) {
    const int len = static_cast<int>(sentences[si].chars.size());
    if (!cur.empty() && cur_tokens + len > budget) {
      groups.push_back(std::move(cur));
      cur.clear();
      cur_tokens = 0;
    }
    cur.push_back(si);
    cur_tokens += len;
    if (cur_tokens > budget) {  // single over-long sentence
      groups.push_back(std::move(cur));
      cur.clear();
      cur_tokens = 0;
    }
  }
  if (!cur.empty()) groups.push_back(std::move(cur));

  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<Batch> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    Batch b;
    for (std::size_t si : g)
      b.n_max = std::max(b.n_max, static_cast<int>(sentences[si].chars.size()));
    for (std::size_t si : g) {
      const CharSequence& cs = sentences[si];
      const int len = static_cast<int>(cs.chars.size());
      std::vector<int> row(b.n_max, kPadId);
      for (int i = 0; i < len; ++i) row[i] = vocab.lookup(cs.chars[i]);
      b.ids.push_back(std::move(row));
      b.lengths.push_back(len);
      b.gold.push_back(cs.gold_labels());
      std::vector<uint8_t> valid(std::max(b.n_max - 1, 0), 0);
      for (int gpos = 0; gpos + 1 < len; ++gpos) valid[gpos] = 1;
      b.valid.push_back(std::move(valid));
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace gdseg
