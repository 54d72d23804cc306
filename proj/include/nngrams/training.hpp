#ifndef NNGRAMS_TRAINING_HPP
#define NNGRAMS_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nngrams/model.hpp"
#include "nngrams/noise.hpp"

namespace nngrams {

// One NCE classification instance: the data word's features plus f noise
// samples. All feature vectors share the history; only the current word
// and the count rows ending at it differ.
struct TrainingExample {
  FeatureVector target;
  double target_log_noise_prob = 0.0;
  std::vector<std::pair<FeatureVector, double>> noise;  // (features, log P_noise)
};

// Posterior that a sample came from the data rather than one of f noise
// draws: p_data / (p_data + f * p_noise).
double nce_posterior(double p_data, double p_noise, int f);

// NCE logit: score - ln(f) - log_noise_prob. sigmoid(nce_logit) equals
// nce_posterior(exp(score), exp(log_noise_prob), f).
double nce_logit(double score, double f, double log_noise_prob);

// Numerically stable helpers (no overflow for |x| up to 1e3 and beyond).
double log_sigmoid(double x);
double sigmoid(double x);

// Mean NCE loss over the batch and exact backprop gradients. Per example:
// -log sigmoid(l_data) - sum_j log(1 - sigmoid(l_noise_j)).
double nce_loss_and_grad(const ModelParams& params,
                         const std::vector<TrainingExample>& batch,
                         ModelParams* grads);

double nce_loss(const ModelParams& params,
                const std::vector<TrainingExample>& batch);

struct AdaGradState {
  ModelParams accumulators;  // per-parameter sums of squared gradients
  double lr = 0.01;
  double eps = 1e-8;
};

AdaGradState make_adagrad(const ModelParams& params, double lr, double eps);

// acc += g^2; theta -= lr * g / (sqrt(acc) + eps). Returns false without
// touching params or state when any gradient is non-finite.
bool adagrad_step(ModelParams* params, AdaGradState* state,
                  const ModelParams& grads);

struct TrainConfig {
  double lr = 0.01;
  int batch_size = 200;
  int f = 1;
  std::int64_t max_steps = 1000;
  std::uint64_t seed = 0;
  double eps = 1e-8;
  int eval_interval = 50;
  double clip_norm = 5.0;        // global-norm gradient clip
  double plateau_tol = 1e-4;     // smoothed-loss improvement threshold
  void validate() const;
};

struct TrainSentence {
  std::string utt_id;
  TokenizedSentence sentence;
};

struct TrainResult {
  ModelParams params;
  std::vector<std::string> log_lines;  // step=<n> loss=<f> examples=<n> wall_ms=<n>
  std::int64_t steps = 0;
  std::uint64_t examples = 0;
  std::uint64_t skipped_tokens = 0;
  double final_interval_loss = 0.0;
  bool converged = false;  // stopped on the plateau rule, not the budget
};

// Deterministic given the seed: init, data order and noise draws. Cycles
// over the corpus until the step budget is exhausted or the smoothed loss
// stops improving (window of 10 evaluations, threshold plateau_tol).
// Noise is drawn fresh each epoch. `on_eval`, when set, runs at every
// evaluation point with (step, interval mean loss, params).
TrainResult train(
    const TrainConfig& config, const ModelConfig& model_config,
    const std::vector<TrainSentence>& data, const NGramStore& store,
    NoiseSource& noise,
    const std::function<void(std::int64_t, double, const ModelParams&)>&
        on_eval = nullptr);

// Builds a tiny random model and batch and compares analytic gradients
// against central differences, parameter by parameter. Relative error
// uses max(|analytic|, |fd|) as denominator, absolute error below 1e-8;
// parameters whose perturbation flips a ReLU region are skipped.
double gradient_check(const ModelConfig& model_config, std::uint64_t seed,
                      double epsilon);

}  // namespace nngrams

#endif
