#ifndef NNGRAMS_MODEL_HPP
#define NNGRAMS_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nngrams/common.hpp"
#include "nngrams/ngram_store.hpp"

namespace nngrams {

// Which input branches are active. Ablation machinery: embeddings_only
// drops the count branch, counts_only drops the embedding branch.
enum class InputMode { kFull, kEmbeddingsOnly, kCountsOnly };

std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& s);

struct ModelConfig {
  WordId vocab_size = 0;  // V
  int embedding_dim = 0;  // d
  int k_history = 0;      // K previous words
  int n_counts = 0;       // N, order of the count features
  int hidden_a = 0;       // ReLU block on embeddings
  int hidden_b = 0;       // ReLU block on counts
  int hidden_c = 0;       // ReLU block on the concatenation
  InputMode input_mode = InputMode::kFull;

  bool use_embeddings() const { return input_mode != InputMode::kCountsOnly; }
  bool use_counts() const { return input_mode != InputMode::kEmbeddingsOnly; }
  int embed_input_dim() const { return (k_history + 1) * embedding_dim; }
  int count_input_dim() const { return (k_history + 1) * n_counts; }
  int concat_dim() const {
    return (use_embeddings() ? hidden_a : 0) + (use_counts() ? hidden_b : 0);
  }
  void validate() const;
};

// Count rescaling: 0.1*ln(C) for C > 0, -1 for C = 0. Natural log; the
// base is pinned in checkpoints as rescale_log_base.
double rescale_count(std::uint64_t c);

inline constexpr const char* kRescaleLogBase = "e";

// One scoring input: the current word, its K-word history (nearest-first)
// and the (K+1) x N count matrix, raw and rescaled.
struct FeatureVector {
  IdSeq word_ids;                        // K+1 ids, current word first
  std::vector<std::uint64_t> counts_raw; // (K+1)*N row-major
  Eigen::VectorXd counts_rescaled;       // same layout, the c' vector
};

FeatureVector make_feature(const NGramStore& store, const IdSeq& window,
                           const ModelConfig& config);

// All weights of the network. Inactive branches hold empty tensors.
struct ModelParams {
  ModelConfig config;
  Eigen::MatrixXd embeddings;  // V x d, row per word
  Eigen::MatrixXd w_a;         // (K+1)d x H_A
  Eigen::VectorXd b_a;
  Eigen::MatrixXd w_b;         // (K+1)N x H_B
  Eigen::VectorXd b_b;
  Eigen::MatrixXd w_c;         // concat_dim x H_C
  Eigen::VectorXd b_c;
  Eigen::VectorXd w_out;       // H_C
  Eigen::VectorXd b_out;       // size 1
};

// Applies f(name, tensor) to every active tensor in a fixed order; the
// order defines initialization, checkpoint layout and flat indexing.
template <class Params, class F>
void for_each_tensor(Params& p, F&& f) {
  if (p.config.use_embeddings()) {
    f("E", p.embeddings);
    f("W_A", p.w_a);
    f("b_A", p.b_a);
  }
  if (p.config.use_counts()) {
    f("W_B", p.w_b);
    f("b_B", p.b_b);
  }
  f("W_C", p.w_c);
  f("b_C", p.b_c);
  f("w_out", p.w_out);
  f("b_out", p.b_out);
}

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out)) per matrix), zero
// biases; bitwise deterministic given the seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Same shapes, all zeros (gradient and accumulator buffers).
ModelParams zeros_like(const ModelParams& params);

std::int64_t total_parameters(const ModelParams& params);

// Exact weight+bias total for the configured mode, without allocating.
std::int64_t parameter_count(const ModelConfig& config);

// Pre-activations and activations of one forward pass, kept for backprop.
struct ForwardCache {
  Eigen::VectorXd x_a;          // concatenated embeddings
  Eigen::VectorXd z_a, h_a;
  Eigen::VectorXd z_b, h_b;     // count branch (input is counts_rescaled)
  Eigen::VectorXd concat;
  Eigen::VectorXd z_c, h_c;
};

// Unnormalized log-probability score of the current word given history and
// counts. Masked branches are skipped entirely.
double forward(const ModelParams& params, const FeatureVector& feat,
               ForwardCache* cache = nullptr);

// Single-precision scorer for speed; excluded from tolerance-critical
// paths. Casts the parameters once at construction.
class ScorerF32 {
 public:
  explicit ScorerF32(const ModelParams& params);
  double score(const FeatureVector& feat) const;

 private:
  ModelConfig config_;
  Eigen::MatrixXf embeddings_, w_a_, w_b_, w_c_;
  Eigen::VectorXf b_a_, b_b_, b_c_, w_out_;
  float b_out_ = 0.0f;
};

// Exact k nearest embedding rows by Euclidean distance, ascending, query
// excluded, ties broken by ascending id.
std::vector<std::pair<WordId, double>> nearest_neighbors(
    const ModelParams& params, WordId word, WordId k);

// Checkpoint: magic NNGRAMS1, text header with the config and rescale log
// base, then each tensor as u64 rows, u64 cols and row-major little-endian
// float64. Loading validates shapes against the header.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace nngrams

#endif
