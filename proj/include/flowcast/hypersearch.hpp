#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"
#include "flowcast/deepnet.hpp"

namespace flowcast::search {

/// Random-search space over architecture and regularization weight.
/// depth_min = 0 admits the pure linear model.
struct SearchSpace {
  std::vector<nn::Activation> activations{nn::Activation::Tanh,
                                          nn::Activation::Relu};
  int depth_min = 1;
  int depth_max = 8;
  int width_min = 1;
  int width_max = 200;
  double lambda_min = 1e-4;  // sampled log-uniform
  double lambda_max = 1e-2;
  int budget = 50;

  void validate() const;
};

/// One draw: activation uniform over the set, depth uniform integer, each
/// width uniform integer, lambda log-uniform. Non-architecture fields come
/// from `base` (dims, optimizer settings, penalty kind).
nn::NetConfig sample_config(const SearchSpace& space, Rng& rng,
                            const nn::NetConfig& base);

struct Candidate {
  int index = 0;
  nn::NetConfig config;
  double val_mse = 0.0;
  double train_mse = 0.0;
  double seconds = 0.0;
  std::size_t param_count = 0;
  bool failed = false;
  std::string error;
};

struct SearchOptions {
  int workers = 0;               // 0 = hardware concurrency
  int epochs_per_candidate = 50; // reduced epochs during the search
  int final_epochs = -1;         // winner retraining; -1 = base.epochs
  std::uint64_t seed = 0;
};

struct SearchResult {
  nn::DeepNet best;                   // winner retrained at full epochs
  std::vector<Candidate> leaderboard; // sorted by (val_mse, params, index)
  int best_index = -1;
};

/// Trains `budget` sampled configs scored by validation MSE. Candidates are
/// independent and may run on several workers; the leaderboard is a
/// deterministic function of the seed. Throws NumericError when every
/// candidate diverges.
SearchResult random_search(const data::LagDesign& train,
                           const data::LagDesign& valid,
                           const SearchSpace& space, const nn::NetConfig& base,
                           const SearchOptions& opts = {});

void save_leaderboard_csv(const std::vector<Candidate>& leaderboard,
                          const std::string& path);

}  // namespace flowcast::search
