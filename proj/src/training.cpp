#include "nngrams/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace nngrams {

double nce_posterior(double p_data, double p_noise, int f) {
  if (!(p_data > 0.0) || !(p_noise > 0.0)) {
    throw ValidationError("nce_posterior requires positive probabilities");
  }
  if (f < 1) {
    throw ValidationError("f must be >= 1");
  }
  return p_data / (p_data + static_cast<double>(f) * p_noise);
}

double nce_logit(double score, double f, double log_noise_prob) {
  return score - std::log(f) - log_noise_prob;
}

double log_sigmoid(double x) {
  // log(1/(1+e^-x)) = -softplus(-x)
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// Accumulates d(loss)/d(score) through one cached forward pass.
void backward(const ModelParams& params, const FeatureVector& feat,
              const ForwardCache& cache, double dscore, ModelParams* grads) {
  const ModelConfig& cfg = params.config;

  grads->w_out.noalias() += dscore * cache.h_c;
  grads->b_out[0] += dscore;

  Eigen::VectorXd dz_c =
      (dscore * params.w_out.array() * (cache.z_c.array() > 0.0).cast<double>())
          .matrix();
  grads->w_c.noalias() += cache.concat * dz_c.transpose();
  grads->b_c.noalias() += dz_c;
  Eigen::VectorXd dconcat = params.w_c * dz_c;

  Eigen::Index at = 0;
  if (cfg.use_embeddings()) {
    Eigen::VectorXd dz_a = (dconcat.segment(at, cfg.hidden_a).array() *
                            (cache.z_a.array() > 0.0).cast<double>())
                               .matrix();
    at += cfg.hidden_a;
    grads->w_a.noalias() += cache.x_a * dz_a.transpose();
    grads->b_a.noalias() += dz_a;
    Eigen::VectorXd dx_a = params.w_a * dz_a;
    for (int j = 0; j <= cfg.k_history; ++j) {
      grads->embeddings.row(feat.word_ids[static_cast<std::size_t>(j)])
          .noalias() +=
          dx_a.segment(static_cast<Eigen::Index>(j) * cfg.embedding_dim,
                       cfg.embedding_dim)
              .transpose();
    }
  }
  if (cfg.use_counts()) {
    Eigen::VectorXd dz_b = (dconcat.segment(at, cfg.hidden_b).array() *
                            (cache.z_b.array() > 0.0).cast<double>())
                               .matrix();
    grads->w_b.noalias() += feat.counts_rescaled * dz_b.transpose();
    grads->b_b.noalias() += dz_b;
  }
}

}  // namespace

double nce_loss_and_grad(const ModelParams& params,
                         const std::vector<TrainingExample>& batch,
                         ModelParams* grads) {
  if (batch.empty()) {
    throw ValidationError("batch must be non-empty");
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  ForwardCache cache;
  for (const TrainingExample& ex : batch) {
    if (ex.noise.empty()) {
      throw ValidationError("training example must carry f >= 1 noise samples");
    }
    const auto f = static_cast<double>(ex.noise.size());

    const double s = forward(params, ex.target, &cache);
    const double l_data = nce_logit(s, f, ex.target_log_noise_prob);
    loss += -log_sigmoid(l_data) * inv_b;
    if (grads != nullptr) {
      backward(params, ex.target, cache, (sigmoid(l_data) - 1.0) * inv_b,
               grads);
    }

    for (const auto& [feat, log_q] : ex.noise) {
      const double sn = forward(params, feat, &cache);
      const double l_noise = nce_logit(sn, f, log_q);
      // -log(1 - sigmoid(l)) = -log_sigmoid(-l)
      loss += -log_sigmoid(-l_noise) * inv_b;
      if (grads != nullptr) {
        backward(params, feat, cache, sigmoid(l_noise) * inv_b, grads);
      }
    }
  }
  return loss;
}

double nce_loss(const ModelParams& params,
                const std::vector<TrainingExample>& batch) {
  return nce_loss_and_grad(params, batch, nullptr);
}

AdaGradState make_adagrad(const ModelParams& params, double lr, double eps) {
  AdaGradState state;
  state.accumulators = zeros_like(params);
  state.lr = lr;
  state.eps = eps;
  return state;
}

bool adagrad_step(ModelParams* params, AdaGradState* state,
                  const ModelParams& grads) {
  bool finite = true;
  for_each_tensor(grads, [&](const char*, const auto& g) {
    if (!g.allFinite()) finite = false;
  });
  if (!finite) {
    return false;
  }
  const double lr = state->lr, eps = state->eps;
  auto update = [&](auto& theta, auto& acc, const auto& g) {
    acc.array() += g.array().square();
    // Zero gradients leave the parameter untouched even at eps = 0
    // (a fresh accumulator would otherwise produce 0/0).
    theta.array() -= (g.array() != 0.0)
                         .select(lr * g.array() / (acc.array().sqrt() + eps),
                                 0.0);
  };
  const ModelConfig& cfg = params->config;
  if (cfg.use_embeddings()) {
    update(params->embeddings, state->accumulators.embeddings, grads.embeddings);
    update(params->w_a, state->accumulators.w_a, grads.w_a);
    update(params->b_a, state->accumulators.b_a, grads.b_a);
  }
  if (cfg.use_counts()) {
    update(params->w_b, state->accumulators.w_b, grads.w_b);
    update(params->b_b, state->accumulators.b_b, grads.b_b);
  }
  update(params->w_c, state->accumulators.w_c, grads.w_c);
  update(params->b_c, state->accumulators.b_c, grads.b_c);
  update(params->w_out, state->accumulators.w_out, grads.w_out);
  update(params->b_out, state->accumulators.b_out, grads.b_out);
  return true;
}

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ValidationError("train.lr must be positive");
  if (batch_size < 1) throw ValidationError("train.batch_size must be positive");
  if (f < 1) throw ValidationError("train.f must be positive");
  if (max_steps < 0) throw ValidationError("train.max_steps must be >= 0");
  if (eps <= 0.0) throw ValidationError("train.eps must be positive");
  if (eval_interval < 1) throw ValidationError("train.eval_interval must be positive");
}

namespace {

double global_grad_norm(const ModelParams& grads) {
  double sq = 0.0;
  for_each_tensor(grads, [&](const char*, const auto& g) {
    sq += g.array().square().sum();
  });
  return std::sqrt(sq);
}

void scale_grads(ModelParams* grads, double factor) {
  for_each_tensor(*grads, [&](const char*, auto& g) { g *= factor; });
}

void zero_grads(ModelParams* grads) {
  for_each_tensor(*grads, [&](const char*, auto& g) { g.setZero(); });
}

}  // namespace

TrainResult train(
    const TrainConfig& config, const ModelConfig& model_config,
    const std::vector<TrainSentence>& data, const NGramStore& store,
    NoiseSource& noise,
    const std::function<void(std::int64_t, double, const ModelParams&)>&
        on_eval) {
  config.validate();
  model_config.validate();

  std::uint64_t window_count = 0;
  for (const auto& s : data) {
    window_count += s.sentence.ids.size() - 1;
  }
  if (window_count == 0) {
    throw DataError("training data stream is empty");
  }

  TrainResult result;
  result.params = init_params(model_config, config.seed);
  if (config.max_steps == 0) {
    return result;
  }

  AdaGradState opt = make_adagrad(result.params, config.lr, config.eps);
  ModelParams grads = zeros_like(result.params);
  Rng noise_rng(config.seed ^ 0x6e6f697365ull);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<TrainingExample> batch;
  batch.reserve(static_cast<std::size_t>(config.batch_size));
  IdSeq window(static_cast<std::size_t>(model_config.k_history) + 1);

  double interval_loss = 0.0;
  std::int64_t interval_batches = 0;
  std::vector<double> eval_history;
  bool stop = false;

  auto run_batch = [&]() {
    zero_grads(&grads);
    const double loss = nce_loss_and_grad(result.params, batch, &grads);
    if (config.clip_norm > 0.0) {
      const double norm = global_grad_norm(grads);
      if (norm > config.clip_norm) {
        scale_grads(&grads, config.clip_norm / norm);
      }
    }
    if (!adagrad_step(&result.params, &opt, grads)) {
      result.log_lines.push_back("step=" + std::to_string(result.steps + 1) +
                                 " skipped=non_finite_gradient");
    }
    result.examples += batch.size();
    batch.clear();
    ++result.steps;
    interval_loss += loss;
    ++interval_batches;

    if (result.steps % config.eval_interval == 0 ||
        result.steps == config.max_steps) {
      const double mean_loss =
          interval_loss / static_cast<double>(interval_batches);
      result.final_interval_loss = mean_loss;
      const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      std::ostringstream line;
      line.precision(10);
      line << "step=" << result.steps << " loss=" << mean_loss
           << " examples=" << result.examples << " wall_ms=" << wall;
      result.log_lines.push_back(line.str());
      if (on_eval) {
        on_eval(result.steps, mean_loss, result.params);
      }
      eval_history.push_back(mean_loss);
      interval_loss = 0.0;
      interval_batches = 0;
      // Plateau rule: improvement across the last 10 evaluations below
      // the threshold means convergence.
      const std::size_t w = 10;
      if (eval_history.size() > w &&
          eval_history[eval_history.size() - 1 - w] - eval_history.back() <
              config.plateau_tol) {
        result.converged = true;
        stop = true;
      }
    }
    if (result.steps >= config.max_steps) {
      stop = true;
    }
  };

  while (!stop) {
    const std::int64_t steps_before_epoch = result.steps;
    // One epoch; noise is redrawn every pass.
    for (const auto& ts : data) {
      if (stop) break;
      const IdSeq& ids = ts.sentence.ids;
      for (std::size_t pos = 1; pos < ids.size() && !stop; ++pos) {
        window[0] = ids[pos];
        for (int j = 1; j <= model_config.k_history; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos) - j;
          window[static_cast<std::size_t>(j)] =
              src >= 0 ? ids[static_cast<std::size_t>(src)] : Vocabulary::kBos;
        }
        IdSeq history(window.begin() + 1, window.end());
        auto draw = noise.draw(ts.utt_id, pos - 1, window[0], history,
                               config.f, noise_rng);
        if (!draw.has_value()) {
          ++result.skipped_tokens;
          continue;
        }
        TrainingExample ex;
        ex.target = make_feature(store, window, model_config);
        ex.target_log_noise_prob = draw->data_log_noise_prob;
        ex.noise.reserve(draw->samples.size());
        IdSeq noise_window(window);
        for (const NoiseSample& s : draw->samples) {
          noise_window[0] = s.word;
          ex.noise.emplace_back(make_feature(store, noise_window, model_config),
                                s.log_prob);
        }
        batch.push_back(std::move(ex));
        if (static_cast<int>(batch.size()) == config.batch_size) {
          run_batch();
        }
      }
    }
    if (!stop && !batch.empty()) {
      run_batch();  // trailing partial batch closes the epoch
    }
    if (!stop && result.steps == steps_before_epoch) {
      throw DataError("no trainable tokens: every token was skipped");
    }
  }
  return result;
}

double gradient_check(const ModelConfig& model_config, std::uint64_t seed,
                      double epsilon) {
  ModelParams params = init_params(model_config, seed);
  Rng rng(seed ^ 0x67726164ull);

  // Random batch: ids, raw counts and noise log-probabilities.
  const int f = 2;
  std::vector<TrainingExample> batch;
  auto random_feature = [&]() {
    FeatureVector feat;
    feat.word_ids.resize(static_cast<std::size_t>(model_config.k_history) + 1);
    for (auto& id : feat.word_ids) {
      id = static_cast<WordId>(rng.next_u64() %
                               static_cast<std::uint64_t>(model_config.vocab_size));
    }
    const std::size_t dim =
        static_cast<std::size_t>(model_config.count_input_dim());
    feat.counts_raw.resize(dim);
    feat.counts_rescaled.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      feat.counts_raw[i] = rng.next_u64() % 40;
      feat.counts_rescaled[static_cast<Eigen::Index>(i)] =
          rescale_count(feat.counts_raw[i]);
    }
    return feat;
  };
  for (int i = 0; i < 3; ++i) {
    TrainingExample ex;
    ex.target = random_feature();
    ex.target_log_noise_prob = std::log(rng.uniform(0.05, 1.0));
    for (int j = 0; j < f; ++j) {
      ex.noise.emplace_back(random_feature(), std::log(rng.uniform(0.05, 1.0)));
    }
    batch.push_back(std::move(ex));
  }

  ModelParams grads = zeros_like(params);
  nce_loss_and_grad(params, batch, &grads);

  // ReLU region signature: which pre-activations are positive across the
  // whole batch. A perturbation that flips any of them crosses a kink and
  // the parameter is skipped.
  auto signature = [&](const ModelParams& p) {
    std::vector<char> sig;
    ForwardCache cache;
    auto push = [&](const Eigen::VectorXd& z) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        sig.push_back(z[i] > 0.0 ? 1 : 0);
      }
    };
    for (const TrainingExample& ex : batch) {
      forward(p, ex.target, &cache);
      push(cache.z_a);
      push(cache.z_b);
      push(cache.z_c);
      for (const auto& [feat, log_q] : ex.noise) {
        forward(p, feat, &cache);
        push(cache.z_a);
        push(cache.z_b);
        push(cache.z_c);
      }
    }
    return sig;
  };

  double max_err = 0.0;
  auto check_tensor = [&](auto& theta, const auto& analytic) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      double* cell = theta.data() + i;
      const double saved = *cell;
      *cell = saved + epsilon;
      const auto sig_plus = signature(params);
      const double loss_plus = nce_loss(params, batch);
      *cell = saved - epsilon;
      const auto sig_minus = signature(params);
      const double loss_minus = nce_loss(params, batch);
      *cell = saved;
      if (sig_plus != sig_minus) {
        continue;  // kink crossed
      }
      const double fd = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double g = *(analytic.data() + i);
      const double denom = std::max(std::abs(g), std::abs(fd));
      const double err =
          std::abs(g) < 1e-8 && std::abs(fd) < 1e-8
              ? std::abs(fd - g)
              : std::abs(fd - g) / denom;
      max_err = std::max(max_err, err);
    }
  };

  const ModelConfig& cfg = params.config;
  if (cfg.use_embeddings()) {
    check_tensor(params.embeddings, grads.embeddings);
    check_tensor(params.w_a, grads.w_a);
    check_tensor(params.b_a, grads.b_a);
  }
  if (cfg.use_counts()) {
    check_tensor(params.w_b, grads.w_b);
    check_tensor(params.b_b, grads.b_b);
  }
  check_tensor(params.w_c, grads.w_c);
  check_tensor(params.b_c, grads.b_c);
  check_tensor(params.w_out, grads.w_out);
  check_tensor(params.b_out, grads.b_out);
  return max_err;
}

}  // namespace nngrams
