#include "nngrams/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace nngrams {

std::string to_string(InputMode mode) {
  switch (mode) {
    case InputMode::kFull: return "full";
    case InputMode::kEmbeddingsOnly: return "embeddings_only";
    case InputMode::kCountsOnly: return "counts_only";
  }
  throw ValidationError("bad input mode");
}

InputMode input_mode_from_string(const std::string& s) {
  if (s == "full") return InputMode::kFull;
  if (s == "embeddings_only") return InputMode::kEmbeddingsOnly;
  if (s == "counts_only") return InputMode::kCountsOnly;
  throw ValidationError("unknown input_mode: " + s);
}

void ModelConfig::validate() const {
  if (vocab_size < 3) throw ValidationError("model.V must be >= 3");
  if (embedding_dim < 1) throw ValidationError("model.d must be positive");
  if (k_history < 1) throw ValidationError("model.K must be positive");
  if (n_counts < 1) throw ValidationError("model.N must be positive");
  if (hidden_a < 1 || hidden_b < 1 || hidden_c < 1) {
    throw ValidationError("hidden widths must be positive");
  }
}

double rescale_count(std::uint64_t c) {
  return c > 0 ? 0.1 * std::log(static_cast<double>(c)) : -1.0;
}

FeatureVector make_feature(const NGramStore& store, const IdSeq& window,
                           const ModelConfig& config) {
  if (static_cast<int>(window.size()) != config.k_history + 1) {
    throw ValidationError("window must hold K+1 word ids");
  }
  FeatureVector feat;
  feat.word_ids = window;
  feat.counts_raw = count_matrix(store, window, config.n_counts);
  feat.counts_rescaled.resize(static_cast<Eigen::Index>(feat.counts_raw.size()));
  for (std::size_t i = 0; i < feat.counts_raw.size(); ++i) {
    feat.counts_rescaled[static_cast<Eigen::Index>(i)] =
        rescale_count(feat.counts_raw[i]);
  }
  return feat;
}

namespace {

double glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng rng(seed);

  if (config.use_embeddings()) {
    p.embeddings.resize(config.vocab_size, config.embedding_dim);
    fill_uniform(p.embeddings,
                 glorot_bound(config.vocab_size, config.embedding_dim), rng);
    p.w_a.resize(config.embed_input_dim(), config.hidden_a);
    fill_uniform(p.w_a, glorot_bound(p.w_a.rows(), p.w_a.cols()), rng);
    p.b_a = Eigen::VectorXd::Zero(config.hidden_a);
  }
  if (config.use_counts()) {
    p.w_b.resize(config.count_input_dim(), config.hidden_b);
    fill_uniform(p.w_b, glorot_bound(p.w_b.rows(), p.w_b.cols()), rng);
    p.b_b = Eigen::VectorXd::Zero(config.hidden_b);
  }
  p.w_c.resize(config.concat_dim(), config.hidden_c);
  fill_uniform(p.w_c, glorot_bound(p.w_c.rows(), p.w_c.cols()), rng);
  p.b_c = Eigen::VectorXd::Zero(config.hidden_c);

  Eigen::MatrixXd out(config.hidden_c, 1);
  fill_uniform(out, glorot_bound(config.hidden_c, 1), rng);
  p.w_out = out.col(0);
  p.b_out = Eigen::VectorXd::Zero(1);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z;
  z.config = params.config;
  z.embeddings = Eigen::MatrixXd::Zero(params.embeddings.rows(),
                                       params.embeddings.cols());
  z.w_a = Eigen::MatrixXd::Zero(params.w_a.rows(), params.w_a.cols());
  z.b_a = Eigen::VectorXd::Zero(params.b_a.size());
  z.w_b = Eigen::MatrixXd::Zero(params.w_b.rows(), params.w_b.cols());
  z.b_b = Eigen::VectorXd::Zero(params.b_b.size());
  z.w_c = Eigen::MatrixXd::Zero(params.w_c.rows(), params.w_c.cols());
  z.b_c = Eigen::VectorXd::Zero(params.b_c.size());
  z.w_out = Eigen::VectorXd::Zero(params.w_out.size());
  z.b_out = Eigen::VectorXd::Zero(params.b_out.size());
  return z;
}

std::int64_t total_parameters(const ModelParams& params) {
  std::int64_t n = 0;
  for_each_tensor(params, [&](const char*, const auto& t) { n += t.size(); });
  return n;
}

std::int64_t parameter_count(const ModelConfig& config) {
  config.validate();
  std::int64_t n = 0;
  if (config.use_embeddings()) {
    n += static_cast<std::int64_t>(config.vocab_size) * config.embedding_dim;
    n += static_cast<std::int64_t>(config.embed_input_dim()) * config.hidden_a +
         config.hidden_a;
  }
  if (config.use_counts()) {
    n += static_cast<std::int64_t>(config.count_input_dim()) * config.hidden_b +
         config.hidden_b;
  }
  n += static_cast<std::int64_t>(config.concat_dim()) * config.hidden_c +
       config.hidden_c;
  n += config.hidden_c + 1;
  return n;
}

double forward(const ModelParams& params, const FeatureVector& feat,
               ForwardCache* cache) {
  const ModelConfig& cfg = params.config;
  if (static_cast<int>(feat.word_ids.size()) != cfg.k_history + 1 ||
      feat.counts_rescaled.size() != cfg.count_input_dim()) {
    throw ValidationError("feature shapes do not match model config");
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;

  if (cfg.use_embeddings()) {
    c.x_a.resize(cfg.embed_input_dim());
    for (int j = 0; j <= cfg.k_history; ++j) {
      const WordId id = feat.word_ids[static_cast<std::size_t>(j)];
      if (id < 0 || id >= cfg.vocab_size) {
        throw ValidationError("word id out of range [0, V)");
      }
      c.x_a.segment(static_cast<Eigen::Index>(j) * cfg.embedding_dim,
                    cfg.embedding_dim) = params.embeddings.row(id);
    }
    c.z_a = params.w_a.transpose() * c.x_a + params.b_a;
    c.h_a = c.z_a.cwiseMax(0.0);
  }
  if (cfg.use_counts()) {
    c.z_b = params.w_b.transpose() * feat.counts_rescaled + params.b_b;
    c.h_b = c.z_b.cwiseMax(0.0);
  }

  c.concat.resize(cfg.concat_dim());
  Eigen::Index at = 0;
  if (cfg.use_embeddings()) {
    c.concat.segment(at, cfg.hidden_a) = c.h_a;
    at += cfg.hidden_a;
  }
  if (cfg.use_counts()) {
    c.concat.segment(at, cfg.hidden_b) = c.h_b;
  }

  c.z_c = params.w_c.transpose() * c.concat + params.b_c;
  c.h_c = c.z_c.cwiseMax(0.0);
  return params.w_out.dot(c.h_c) + params.b_out[0];
}

ScorerF32::ScorerF32(const ModelParams& params) : config_(params.config) {
  if (config_.use_embeddings()) {
    embeddings_ = params.embeddings.cast<float>();
    w_a_ = params.w_a.cast<float>();
    b_a_ = params.b_a.cast<float>();
  }
  if (config_.use_counts()) {
    w_b_ = params.w_b.cast<float>();
    b_b_ = params.b_b.cast<float>();
  }
  w_c_ = params.w_c.cast<float>();
  b_c_ = params.b_c.cast<float>();
  w_out_ = params.w_out.cast<float>();
  b_out_ = static_cast<float>(params.b_out[0]);
}

double ScorerF32::score(const FeatureVector& feat) const {
  Eigen::VectorXf concat(config_.concat_dim());
  Eigen::Index at = 0;
  if (config_.use_embeddings()) {
    Eigen::VectorXf x_a(config_.embed_input_dim());
    for (int j = 0; j <= config_.k_history; ++j) {
      x_a.segment(static_cast<Eigen::Index>(j) * config_.embedding_dim,
                  config_.embedding_dim) =
          embeddings_.row(feat.word_ids[static_cast<std::size_t>(j)]);
    }
    concat.segment(at, config_.hidden_a) =
        (w_a_.transpose() * x_a + b_a_).cwiseMax(0.0f);
    at += config_.hidden_a;
  }
  if (config_.use_counts()) {
    Eigen::VectorXf x_b = feat.counts_rescaled.cast<float>();
    concat.segment(at, config_.hidden_b) =
        (w_b_.transpose() * x_b + b_b_).cwiseMax(0.0f);
  }
  Eigen::VectorXf h_c = (w_c_.transpose() * concat + b_c_).cwiseMax(0.0f);
  return static_cast<double>(w_out_.dot(h_c) + b_out_);
}

std::vector<std::pair<WordId, double>> nearest_neighbors(
    const ModelParams& params, WordId word, WordId k) {
  const WordId v = params.config.vocab_size;
  if (word < 0 || word >= v) {
    throw ValidationError("word id out of range");
  }
  if (k < 1 || k >= v) {
    throw ValidationError("k must satisfy 1 <= k < V");
  }
  if (!params.config.use_embeddings()) {
    throw ValidationError("model has no embedding table (counts_only)");
  }
  std::vector<std::pair<double, WordId>> dist;
  dist.reserve(static_cast<std::size_t>(v) - 1);
  const auto query = params.embeddings.row(word);
  for (WordId w = 0; w < v; ++w) {
    if (w == word) continue;
    dist.emplace_back((params.embeddings.row(w) - query).norm(), w);
  }
  std::sort(dist.begin(), dist.end());
  std::vector<std::pair<WordId, double>> out;
  out.reserve(static_cast<std::size_t>(k));
  for (WordId i = 0; i < k; ++i) {
    out.emplace_back(dist[static_cast<std::size_t>(i)].second,
                     dist[static_cast<std::size_t>(i)].first);
  }
  return out;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw DataError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return v;
}

double get_f64(std::istream& in) {
  std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void write_tensor(std::string& out, const Eigen::MatrixXd& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put_f64(out, m(r, c));
    }
  }
}

void write_tensor(std::string& out, const Eigen::VectorXd& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  put_u64(out, 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    put_f64(out, v[i]);
  }
}

void read_tensor(std::istream& in, const char* name, Eigen::MatrixXd& m,
                 Eigen::Index rows, Eigen::Index cols) {
  const auto r = static_cast<Eigen::Index>(get_u64(in));
  const auto c = static_cast<Eigen::Index>(get_u64(in));
  if (r != rows || c != cols) {
    throw DataError(std::string("checkpoint tensor ") + name +
                    " has wrong shape");
  }
  m.resize(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = get_f64(in);
    }
  }
}

void read_tensor(std::istream& in, const char* name, Eigen::VectorXd& v,
                 Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m;
  read_tensor(in, name, m, rows, cols);
  v = m.col(0);
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ostringstream header;
  const ModelConfig& c = params.config;
  header << "NNGRAMS1\n"
         << "V " << c.vocab_size << '\n'
         << "d " << c.embedding_dim << '\n'
         << "K " << c.k_history << '\n'
         << "N " << c.n_counts << '\n'
         << "H_A " << c.hidden_a << '\n'
         << "H_B " << c.hidden_b << '\n'
         << "H_C " << c.hidden_c << '\n'
         << "input_mode " << to_string(c.input_mode) << '\n'
         << "rescale_log_base " << kRescaleLogBase << '\n'
         << "DATA\n";
  std::string out = header.str();
  for_each_tensor(params, [&](const char*, const auto& t) {
    write_tensor(out, t);
  });
  atomic_write_file(path, out);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open checkpoint: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != "NNGRAMS1") {
    throw DataError("bad checkpoint magic: " + path);
  }
  ModelConfig cfg;
  while (std::getline(in, line)) {
    if (line == "DATA") break;
    std::istringstream iss(line);
    std::string key, value;
    iss >> key >> value;
    if (key == "V") cfg.vocab_size = static_cast<WordId>(std::stoll(value));
    else if (key == "d") cfg.embedding_dim = std::stoi(value);
    else if (key == "K") cfg.k_history = std::stoi(value);
    else if (key == "N") cfg.n_counts = std::stoi(value);
    else if (key == "H_A") cfg.hidden_a = std::stoi(value);
    else if (key == "H_B") cfg.hidden_b = std::stoi(value);
    else if (key == "H_C") cfg.hidden_c = std::stoi(value);
    else if (key == "input_mode") cfg.input_mode = input_mode_from_string(value);
    else if (key == "rescale_log_base") {
      if (value != kRescaleLogBase) {
        throw DataError("unsupported rescale_log_base: " + value);
      }
    } else {
      throw DataError("unknown checkpoint header key: " + key);
    }
  }
  cfg.validate();

  ModelParams p;
  p.config = cfg;
  if (cfg.use_embeddings()) {
    read_tensor(in, "E", p.embeddings, cfg.vocab_size, cfg.embedding_dim);
    read_tensor(in, "W_A", p.w_a, cfg.embed_input_dim(), cfg.hidden_a);
    read_tensor(in, "b_A", p.b_a, cfg.hidden_a, 1);
  }
  if (cfg.use_counts()) {
    read_tensor(in, "W_B", p.w_b, cfg.count_input_dim(), cfg.hidden_b);
    read_tensor(in, "b_B", p.b_b, cfg.hidden_b, 1);
  }
  read_tensor(in, "W_C", p.w_c, cfg.concat_dim(), cfg.hidden_c);
  read_tensor(in, "b_C", p.b_c, cfg.hidden_c, 1);
  read_tensor(in, "w_out", p.w_out, cfg.hidden_c, 1);
  read_tensor(in, "b_out", p.b_out, 1, 1);
  return p;
}

}  // namespace nngrams
