#include "gdseg/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gdseg {

void TrainConfig::validate() const {
  if (warmup_steps < 1) throw std::invalid_argument("config: warmup_steps must be >= 1");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 || epsilon <= 0.0)
    throw std::invalid_argument("config: bad Adam constants");
  if (token_budget < 1) throw std::invalid_argument("config: token_budget must be >= 1");
  if (max_steps < 0) throw std::invalid_argument("config: max_steps must be >= 0");
  if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for key '" + key + "': " + v);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for key '" + key + "': " + v);
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    long r = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for key '" + key + "': " + v);
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw std::invalid_argument("config: bad number for key '" + key + "': " + v);
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  // encoder
  if (key == "d_model") enc.d_model = parse_int(key, value);
  else if (key == "n_layers") enc.n_layers = parse_int(key, value);
  else if (key == "d_ff") enc.d_ff = parse_int(key, value);
  else if (key == "heads") enc.heads = parse_int(key, value);
  else if (key == "dropout") enc.dropout = parse_double(key, value);
  else if (key == "sigma") enc.sigma = parse_double(key, value);
  else if (key == "hired_after") enc.hired_after = parse_int(key, value);
  else if (key == "use_gaussian_mask") enc.use_gaussian_mask = parse_bool(key, value);
  else if (key == "use_directional_mask") enc.use_directional_mask = parse_bool(key, value);
  else if (key == "use_highway_i") enc.use_highway_i = parse_bool(key, value);
  else if (key == "use_highway_o") enc.use_highway_o = parse_bool(key, value);
  else if (key == "enable_forward") enc.enable_forward = parse_bool(key, value);
  else if (key == "enable_center") enc.enable_center = parse_bool(key, value);
  else if (key == "enable_backward") enc.enable_backward = parse_bool(key, value);
  else if (key == "use_word_sum") enc.use_word_sum = parse_bool(key, value);
  else if (key == "use_positional_encoding") enc.use_positional_encoding = parse_bool(key, value);
  else if (key == "scale_by_head_dim") enc.scale_by_head_dim = parse_bool(key, value);
  // trainer
  else if (key == "beta1") train.beta1 = parse_double(key, value);
  else if (key == "beta2") train.beta2 = parse_double(key, value);
  else if (key == "epsilon") train.epsilon = parse_double(key, value);
  else if (key == "warmup_steps") train.warmup_steps = parse_int(key, value);
  else if (key == "token_budget") train.token_budget = parse_int(key, value);
  else if (key == "max_steps") train.max_steps = parse_long(key, value);
  else if (key == "eval_every") train.eval_every = parse_int(key, value);
  else if (key == "seed") train.seed = static_cast<std::uint64_t>(parse_long(key, value));
  else if (key == "min_count") train.min_count = parse_int(key, value);
  else if (key == "target_f1") train.target_f1 = parse_double(key, value);
  // paths
  else if (key == "train_path") train_path = value;
  else if (key == "dev_path") dev_path = value;
  else if (key == "test_path") test_path = value;
  else if (key == "vocab_path") vocab_path = value;
  else if (key == "checkpoint_path") checkpoint_path = value;
  else if (key == "output_path") output_path = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig rc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
      value.erase(value.begin());
    rc.set(key, value);
  }
  return rc;
}

std::string RunConfig::serialize_encoder() const {
  std::ostringstream os;
  os << "d_model=" << enc.d_model << "\n";
  os << "n_layers=" << enc.n_layers << "\n";
  os << "d_ff=" << enc.d_ff << "\n";
  os << "heads=" << enc.heads << "\n";
  os << "dropout=" << enc.dropout << "\n";
  os << "sigma=" << enc.sigma << "\n";
  os << "hired_after=" << enc.hired_after << "\n";
  os << "use_gaussian_mask=" << (enc.use_gaussian_mask ? "true" : "false") << "\n";
  os << "use_directional_mask=" << (enc.use_directional_mask ? "true" : "false") << "\n";
  os << "use_highway_i=" << (enc.use_highway_i ? "true" : "false") << "\n";
  os << "use_highway_o=" << (enc.use_highway_o ? "true" : "false") << "\n";
  os << "enable_forward=" << (enc.enable_forward ? "true" : "false") << "\n";
  os << "enable_center=" << (enc.enable_center ? "true" : "false") << "\n";
  os << "enable_backward=" << (enc.enable_backward ? "true" : "false") << "\n";
  os << "use_word_sum=" << (enc.use_word_sum ? "true" : "false") << "\n";
  os << "use_positional_encoding=" << (enc.use_positional_encoding ? "true" : "false") << "\n";
  os << "scale_by_head_dim=" << (enc.scale_by_head_dim ? "true" : "false") << "\n";
  return os.str();
}

EncoderConfig parse_encoder_config(const std::string& text) {
  RunConfig rc;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("encoder config: bad line: " + line);
    rc.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return rc.enc;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace gdseg
