#include "flowcast/hypersearch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace flowcast::search {

void SearchSpace::validate() const {
  if (activations.empty()) throw ParamError("need at least one activation");
  if (depth_min < 0 || depth_max < depth_min)
    throw ParamError("bad depth range");
  if (width_min < 1 || width_max < width_min)
    throw ParamError("bad width range");
  if (!(lambda_min > 0.0) || lambda_max < lambda_min)
    throw ParamError("bad lambda range");
  if (budget < 1) throw ParamError("budget must be >= 1");
}

nn::NetConfig sample_config(const SearchSpace& space, Rng& rng,
                            const nn::NetConfig& base) {
  space.validate();
  nn::NetConfig cfg = base;
  cfg.activation = space.activations[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(space.activations.size()) - 1))];
  int depth = rng.uniform_int(space.depth_min, space.depth_max);
  cfg.hidden_widths.clear();
  for (int l = 0; l < depth; ++l)
    cfg.hidden_widths.push_back(rng.uniform_int(space.width_min, space.width_max));
  cfg.penalty_weight =
      std::exp(rng.uniform(std::log(space.lambda_min), std::log(space.lambda_max)));
  return cfg;
}

SearchResult random_search(const data::LagDesign& train,
                           const data::LagDesign& valid,
                           const SearchSpace& space, const nn::NetConfig& base,
                           const SearchOptions& opts) {
  space.validate();
  Rng root(opts.seed);
  Rng sampler = root.split("sample");

  // sample all configs up front so the draw order is worker-independent
  std::vector<Candidate> candidates(static_cast<std::size_t>(space.budget));
  for (int i = 0; i < space.budget; ++i) {
    auto& cand = candidates[static_cast<std::size_t>(i)];
    cand.index = i;
    cand.config = sample_config(space, sampler, base);
    cand.config.input_dim = static_cast<int>(train.cols());
    cand.config.output_dim = static_cast<int>(train.y.cols());
    cand.config.epochs = opts.epochs_per_candidate;
    cand.config.seed = Rng::derive_seed(opts.seed, "candidate",
                                        static_cast<std::uint64_t>(i));
  }

  parallel_for(candidates.size(), opts.workers, [&](std::size_t i) {
    auto& cand = candidates[i];
    auto t0 = std::chrono::steady_clock::now();
    try {
      nn::DeepNet net = nn::init_network(cand.config);
      cand.param_count = net.parameter_count();
      net = nn::sgd_train(std::move(net), train, valid);
      cand.val_mse = net.valid_trace.empty()
                         ? std::numeric_limits<double>::infinity()
                         : *std::min_element(net.valid_trace.begin(),
                                             net.valid_trace.end());
      cand.train_mse = net.train_trace.empty() ? 0.0 : net.train_trace.back();
    } catch (const Error& e) {
      cand.failed = true;
      cand.error = e.what();
    }
    cand.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  });

  std::vector<Candidate> ok;
  std::vector<const Candidate*> failed;
  for (const auto& c : candidates)
    if (c.failed) failed.push_back(&c);
    else ok.push_back(c);
  if (ok.empty()) {
    std::ostringstream msg;
    msg << "all " << candidates.size() << " candidate trainings failed:";
    for (const auto* c : failed)
      msg << "\n  candidate " << c->index << ": " << c->error;
    throw NumericError(msg.str());
  }
  std::sort(ok.begin(), ok.end(), [](const Candidate& a, const Candidate& b) {
    if (a.val_mse != b.val_mse) return a.val_mse < b.val_mse;
    if (a.param_count != b.param_count) return a.param_count < b.param_count;
    return a.index < b.index;
  });

  SearchResult result;
  result.leaderboard = ok;
  result.best_index = ok.front().index;

  // retrain the winner at full epochs
  nn::NetConfig final_cfg = ok.front().config;
  final_cfg.epochs = opts.final_epochs >= 0 ? opts.final_epochs : base.epochs;
  result.best = nn::sgd_train(nn::init_network(final_cfg), train, valid);
  return result;
}

void save_leaderboard_csv(const std::vector<Candidate>& leaderboard,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "rank,depth,widths,activation,lambda,val_mse,train_mse,seconds\n";
  int rank = 1;
  for (const auto& c : leaderboard) {
    out << rank++ << ',' << c.config.hidden_widths.size() << ',';
    for (std::size_t i = 0; i < c.config.hidden_widths.size(); ++i) {
      if (i) out << ' ';
      out << c.config.hidden_widths[i];
    }
    out << ',' << nn::to_string(c.config.activation) << ','
        << format_double(c.config.penalty_weight) << ','
        << format_double(c.val_mse) << ',' << format_double(c.train_mse) << ','
        << format_double(c.seconds) << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace flowcast::search
