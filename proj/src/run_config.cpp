#include "nngrams/run_config.hpp"

#include <fstream>
#include <sstream>

namespace nngrams {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad integer for " + key + ": " + value);
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad number for " + key + ": " + value);
  }
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "model.V") model.vocab_size = static_cast<WordId>(parse_int(key, value));
  else if (key == "model.d") model.embedding_dim = static_cast<int>(parse_int(key, value));
  else if (key == "model.K") model.k_history = static_cast<int>(parse_int(key, value));
  else if (key == "model.N") model.n_counts = static_cast<int>(parse_int(key, value));
  else if (key == "model.H_A") model.hidden_a = static_cast<int>(parse_int(key, value));
  else if (key == "model.H_B") model.hidden_b = static_cast<int>(parse_int(key, value));
  else if (key == "model.H_C") model.hidden_c = static_cast<int>(parse_int(key, value));
  else if (key == "model.input_mode") model.input_mode = input_mode_from_string(value);
  else if (key == "train.lr") train.lr = parse_real(key, value);
  else if (key == "train.batch_size") train.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "train.f") train.f = static_cast<int>(parse_int(key, value));
  else if (key == "train.max_steps") train.max_steps = parse_int(key, value);
  else if (key == "train.seed") train.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "train.eps") train.eps = parse_real(key, value);
  else if (key == "train.eval_interval") train.eval_interval = static_cast<int>(parse_int(key, value));
  else if (key == "train.clip_norm") train.clip_norm = parse_real(key, value);
  else if (key == "rescore.lambda") rescore.lambda = parse_real(key, value);
  else if (key == "rescore.model") rescore.model = value;
  else if (key == "rescore.n") rescore.nbest = static_cast<int>(parse_int(key, value));
  else if (key == "katz.order") katz_order = static_cast<int>(parse_int(key, value));
  else if (key == "katz.gt_cutoff") katz_gt_cutoff = static_cast<int>(parse_int(key, value));
  else if (key == "vocab.max_size") vocab_max_size = static_cast<WordId>(parse_int(key, value));
  else if (key == "vocab.min_count") vocab_min_count = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "count.max_order") count_max_order = static_cast<int>(parse_int(key, value));
  else if (key == "noise.confidence_threshold") noise_confidence_threshold = parse_real(key, value);
  else throw ValidationError("unknown config key: " + key);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open config file: " + path);
  }
  RunConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            " is not key = value: " + stripped);
    }
    config.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return config;
}

}  // namespace nngrams
