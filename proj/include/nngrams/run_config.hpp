#ifndef NNGRAMS_RUN_CONFIG_HPP
#define NNGRAMS_RUN_CONFIG_HPP

#include <string>

#include "nngrams/model.hpp"
#include "nngrams/rescore.hpp"
#include "nngrams/training.hpp"

namespace nngrams {

// Flat `section.key = value` text configuration. Unknown keys are errors;
// every field is validated before any stage runs.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  RescoreConfig rescore;

  int katz_order = 6;
  int katz_gt_cutoff = 5;
  WordId vocab_max_size = 2000000;
  std::uint64_t vocab_min_count = 1;
  int count_max_order = 6;
  double noise_confidence_threshold = 0.8;

  // Applies one key; throws ValidationError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  static RunConfig load(const std::string& path);
  static RunConfig defaults();
};

}  // namespace nngrams

#endif
