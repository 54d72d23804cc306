#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "nngrams/katz.hpp"
#include "nngrams/noise.hpp"
#include "nngrams/training.hpp"

using namespace nngrams;

namespace {

ModelConfig tiny_config(InputMode mode = InputMode::kFull) {
  ModelConfig c;
  c.vocab_size = 8;
  c.embedding_dim = 2;
  c.k_history = 2;
  c.n_counts = 2;
  c.hidden_a = 4;
  c.hidden_b = 3;
  c.hidden_c = 4;
  c.input_mode = mode;
  return c;
}

FeatureVector make_feat(const ModelConfig& config, Rng& rng) {
  FeatureVector f;
  for (int j = 0; j <= config.k_history; ++j) {
    f.word_ids.push_back(static_cast<WordId>(
        rng.next_u64() % static_cast<std::uint64_t>(config.vocab_size)));
  }
  const int dim = config.count_input_dim();
  f.counts_rescaled.resize(dim);
  for (int i = 0; i < dim; ++i) {
    f.counts_raw.push_back(rng.next_u64() % 20);
    f.counts_rescaled[i] = rescale_count(f.counts_raw.back());
  }
  return f;
}

std::vector<TrainingExample> random_batch(const ModelConfig& config, int b,
                                          int f, Rng& rng) {
  std::vector<TrainingExample> batch;
  for (int i = 0; i < b; ++i) {
    TrainingExample ex;
    ex.target = make_feat(config, rng);
    ex.target_log_noise_prob = std::log(rng.uniform(0.05, 1.0));
    for (int j = 0; j < f; ++j) {
      ex.noise.emplace_back(make_feat(config, rng),
                            std::log(rng.uniform(0.05, 1.0)));
    }
    batch.push_back(std::move(ex));
  }
  return batch;
}

std::vector<TrainSentence> toy_sentences() {
  // Ids 3..5 over <s>/<unk>-style vocab of size 8.
  std::vector<IdSeq> bodies = {{3, 4}, {3, 5}, {4, 5, 3}, {5}, {3, 4}};
  std::vector<TrainSentence> data;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    TokenizedSentence s;
    s.ids.push_back(Vocabulary::kBos);
    s.ids.insert(s.ids.end(), bodies[i].begin(), bodies[i].end());
    s.ids.push_back(Vocabulary::kEos);
    data.push_back({std::to_string(i), s});
  }
  return data;
}

}  // namespace

TEST_CASE("nce_posterior") {
  CHECK(nce_posterior(0.3, 0.3, 1) == 0.5);
  CHECK(nce_posterior(0.9, 0.1, 1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(nce_posterior(0.5, 0.25, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(nce_posterior(0.0, 0.5, 1), ValidationError);
  CHECK_THROWS_AS(nce_posterior(0.5, -0.1, 1), ValidationError);
  CHECK_THROWS_AS(nce_posterior(0.5, 0.5, 0), ValidationError);
}

TEST_CASE("nce_logit") {
  CHECK(nce_logit(-2.0, 1.0, -3.0) == 1.0);
  CHECK(nce_logit(0.0, std::exp(1.0), 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("sigmoid(nce_logit) equals nce_posterior") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const double score = rng.uniform(-4.0, 4.0);
    const double log_noise = rng.uniform(-5.0, -0.01);
    const int f = 1 + static_cast<int>(rng.next_u64() % 30);
    const double via_logit = sigmoid(nce_logit(score, f, log_noise));
    const double via_post =
        nce_posterior(std::exp(score), std::exp(log_noise), f);
    CHECK(via_logit == doctest::Approx(via_post).epsilon(1e-12));
  }
}

TEST_CASE("log_sigmoid is stable for large logits") {
  CHECK(std::isfinite(log_sigmoid(1000.0)));
  CHECK(std::isfinite(log_sigmoid(-1000.0)));
  CHECK(log_sigmoid(1000.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(log_sigmoid(-1000.0) == doctest::Approx(-1000.0).epsilon(1e-12));
}

TEST_CASE("zero network with zero noise log-probs gives 2 ln 2 per example") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 1);
  for_each_tensor(p, [&](const char*, auto& t) { t.setZero(); });
  Rng rng(2);
  std::vector<TrainingExample> batch = random_batch(config, 4, 1, rng);
  for (auto& ex : batch) {
    ex.target_log_noise_prob = 0.0;
    ex.noise[0].second = 0.0;
  }
  const double loss = nce_loss(p, batch);
  CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("nce loss is positive") {
  const ModelConfig config = tiny_config();
  const ModelParams p = init_params(config, 3);
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto batch = random_batch(config, 3, 2, rng);
    CHECK(nce_loss(p, batch) > 0.0);
  }
}

TEST_CASE("analytic gradients match central differences") {
  for (InputMode mode : {InputMode::kFull, InputMode::kEmbeddingsOnly,
                         InputMode::kCountsOnly}) {
    const double err = gradient_check(tiny_config(mode), 7, 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("coarser finite-difference steps give larger but finite error") {
  const ModelConfig config = tiny_config();
  const double fine = gradient_check(config, 11, 1e-5);
  const double coarse = gradient_check(config, 11, 1e-3);
  CHECK(std::isfinite(coarse));
  CHECK(coarse >= fine);
}

TEST_CASE("dead ReLUs receive exactly zero gradient") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 1);
  for_each_tensor(p, [&](const char*, auto& t) { t.setZero(); });
  // All concat pre-activations sit at -1: the whole C block is dead.
  p.b_c.setConstant(-1.0);
  Rng rng(4);
  auto batch = random_batch(config, 2, 1, rng);
  ModelParams grads = zeros_like(p);
  nce_loss_and_grad(p, batch, &grads);
  CHECK(grads.w_c.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.b_c.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.embeddings.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.w_a.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.w_b.cwiseAbs().maxCoeff() == 0.0);
  // h_c is zero, so only the output bias learns.
  CHECK(grads.w_out.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.b_out[0] != 0.0);
}

TEST_CASE("adagrad first step scales by |g|") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 1);
  AdaGradState state = make_adagrad(p, 0.01, 0.0);
  ModelParams grads = zeros_like(p);
  grads.b_out[0] = 4.0;
  const double before = p.b_out[0];
  REQUIRE(adagrad_step(&p, &state, grads));
  CHECK(p.b_out[0] == doctest::Approx(before - 0.01).epsilon(1e-15));
  CHECK(state.accumulators.b_out[0] == 16.0);
}

TEST_CASE("adagrad zero gradient changes nothing") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 2);
  const ModelParams snapshot = p;
  AdaGradState state = make_adagrad(p, 0.01, 0.0);
  const ModelParams grads = zeros_like(p);
  REQUIRE(adagrad_step(&p, &state, grads));
  CHECK(p.w_c == snapshot.w_c);
  CHECK(p.b_out == snapshot.b_out);
  CHECK(state.accumulators.w_c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adagrad second step uses the running accumulator") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 3);
  AdaGradState state = make_adagrad(p, 0.01, 0.0);
  ModelParams grads = zeros_like(p);
  grads.b_out[0] = 3.0;
  REQUIRE(adagrad_step(&p, &state, grads));
  const double after_first = p.b_out[0];
  grads.b_out[0] = 4.0;
  REQUIRE(adagrad_step(&p, &state, grads));
  // acc = 9 + 16 = 25, update = 0.01 * 4 / 5.
  CHECK(p.b_out[0] == doctest::Approx(after_first - 0.008).epsilon(1e-15));
}

TEST_CASE("adagrad rejects non-finite gradients without touching state") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 4);
  const ModelParams snapshot = p;
  AdaGradState state = make_adagrad(p, 0.01, 1e-8);
  ModelParams grads = zeros_like(p);
  grads.w_c(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(adagrad_step(&p, &state, grads));
  CHECK(p.w_c == snapshot.w_c);
  CHECK(state.accumulators.w_c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adagrad accumulators never decrease across steps") {
  const ModelConfig config = tiny_config();
  ModelParams p = init_params(config, 5);
  AdaGradState state = make_adagrad(p, 0.01, 1e-8);
  Rng rng(6);
  Eigen::MatrixXd prev = state.accumulators.w_c;
  for (int step = 0; step < 10; ++step) {
    ModelParams grads = zeros_like(p);
    const auto batch = random_batch(config, 2, 2, rng);
    nce_loss_and_grad(p, batch, &grads);
    REQUIRE(adagrad_step(&p, &state, grads));
    CHECK((state.accumulators.w_c - prev).minCoeff() >= 0.0);
    prev = state.accumulators.w_c;
  }
}

TEST_CASE("batch gradients are summed in fixed order before the step") {
  const ModelConfig config = tiny_config();
  const ModelParams p = init_params(config, 8);
  Rng rng(9);
  auto batch = random_batch(config, 5, 2, rng);
  ModelParams g1 = zeros_like(p), g2 = zeros_like(p), g3 = zeros_like(p);
  const double l1 = nce_loss_and_grad(p, batch, &g1);
  const double l2 = nce_loss_and_grad(p, batch, &g2);
  CHECK(l1 == l2);
  CHECK(g1.w_c == g2.w_c);
  CHECK(g1.embeddings == g2.embeddings);
  // Reordering the batch changes only floating-point association.
  std::reverse(batch.begin(), batch.end());
  const double l3 = nce_loss_and_grad(p, batch, &g3);
  CHECK(l3 == doctest::Approx(l1).epsilon(1e-12));
  CHECK((g3.w_c - g1.w_c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("train is deterministic given the seed") {
  const auto data = toy_sentences();
  std::vector<TokenizedSentence> corpus;
  for (const auto& t : data) corpus.push_back(t.sentence);
  const NGramStore store = count_ngrams(corpus, 2);
  const KatzLM katz = estimate_katz(store, 8, 2);

  TrainConfig config;
  config.batch_size = 4;
  config.max_steps = 40;
  config.seed = 13;
  config.f = 2;
  config.eval_interval = 10;

  TextNoiseSource noise1(katz), noise2(katz);
  const TrainResult r1 = train(config, tiny_config(), data, store, noise1);
  const TrainResult r2 = train(config, tiny_config(), data, store, noise2);
  CHECK(r1.steps == r2.steps);
  CHECK(r1.params.w_c == r2.params.w_c);
  CHECK(r1.params.embeddings == r2.params.embeddings);
  CHECK(r1.params.b_out == r2.params.b_out);
  CHECK(r1.final_interval_loss == r2.final_interval_loss);
}

TEST_CASE("zero training steps return the initial parameters") {
  const auto data = toy_sentences();
  std::vector<TokenizedSentence> corpus;
  for (const auto& t : data) corpus.push_back(t.sentence);
  const NGramStore store = count_ngrams(corpus, 2);
  const KatzLM katz = estimate_katz(store, 8, 2);
  TextNoiseSource noise(katz);

  TrainConfig config;
  config.max_steps = 0;
  config.seed = 21;
  const TrainResult r = train(config, tiny_config(), data, store, noise);
  const ModelParams init = init_params(tiny_config(), 21);
  CHECK(r.steps == 0);
  CHECK(r.params.w_c == init.w_c);
  CHECK(r.params.embeddings == init.embeddings);
}

TEST_CASE("train refuses an empty data stream") {
  const NGramStore store = count_ngrams({}, 2);
  const KatzLM katz = estimate_katz(store, 8, 2);
  TextNoiseSource noise(katz);
  TrainConfig config;
  CHECK_THROWS_AS(train(config, tiny_config(), {}, store, noise), DataError);
}

TEST_CASE("training reduces the smoothed loss on a toy corpus") {
  const auto data = toy_sentences();
  std::vector<TokenizedSentence> corpus;
  for (const auto& t : data) corpus.push_back(t.sentence);
  const NGramStore store = count_ngrams(corpus, 2);
  const KatzLM katz = estimate_katz(store, 8, 2);
  TextNoiseSource noise(katz);

  TrainConfig config;
  config.batch_size = 8;
  config.max_steps = 400;
  config.seed = 30;
  config.f = 4;
  config.lr = 0.05;
  config.eval_interval = 20;

  double first_loss = -1.0;
  const TrainResult r =
      train(config, tiny_config(), data, store, noise,
            [&](std::int64_t, double loss, const ModelParams&) {
              if (first_loss < 0.0) first_loss = loss;
            });
  REQUIRE(first_loss > 0.0);
  CHECK(r.final_interval_loss < first_loss);
  REQUIRE(!r.log_lines.empty());
  CHECK(r.log_lines.front().rfind("step=", 0) == 0);
  CHECK(r.log_lines.front().find(" loss=") != std::string::npos);
  CHECK(r.log_lines.front().find(" examples=") != std::string::npos);
  CHECK(r.log_lines.front().find(" wall_ms=") != std::string::npos);
}
