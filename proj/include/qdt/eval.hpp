#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qdt/dtree.hpp"
#include "qdt/envs.hpp"
#include "qdt/grammar.hpp"
#include "qdt/rng.hpp"

namespace qdt {

struct EvaluationResult {
  bool valid = false;
  double fitness = 0.0;
  std::vector<std::int64_t> action_counts;
  double entropy = 0.0;
  int tree_depth = 0;
  std::uint64_t eval_seed = 0;
  std::optional<DecisionTree> simplified_tree;
};

// Compact record kept by the optimizers and run logs.
struct ScoredIndividual {
  Genotype genotype;
  double fitness = 0.0;
  double entropy = 0.0;
  int depth = 0;
  bool valid = false;
  std::uint64_t eval_seed = 0;
};

// Entropy of the pooled action counts with logarithm base n_actions, so the
// result lies in [0,1]: 0 for a single repeated action, 1 for uniform usage.
// Zero counts contribute nothing. Requires at least one nonzero count.
double action_entropy(std::span<const std::int64_t> counts);

// (entropy, post-simplification depth); requires a valid result.
std::pair<double, int> descriptor(const EvaluationResult& result);

struct EpisodeStats {
  std::vector<double> returns;
  std::vector<std::int64_t> action_counts;
  double mean_return() const;
};

// Runs n_episodes of epsilon-greedy Q-learning on the tree's leaves. Learning
// stays on for the whole evaluation (learning_rate 0 freezes the policy).
// Episode e reseeds the environment with mix_seed(eval_seed, 1 + e). When
// observation_log is given, every observation the tree is routed on is
// appended (normalized form where the environment asks for it).
EpisodeStats run_episodes(DecisionTree& tree, Environment& env,
                          const RLParams& rl, int n_episodes,
                          std::uint64_t eval_seed, Rng& agent_rng,
                          std::vector<std::vector<double>>* observation_log = nullptr);

// Genotype in, scored and described individual out: decode, init Q, run the
// episode protocol, then simplify and measure. Stateless across calls; safe
// to use from many threads at once.
class Evaluator {
 public:
  Evaluator(ObliqueGrammar grammar, EnvId env, RLParams rl, int n_episodes);

  EvaluationResult evaluate(const Genotype& genotype,
                            std::uint64_t eval_seed) const;
  ScoredIndividual score(const Genotype& genotype,
                         std::uint64_t eval_seed) const;

  const ObliqueGrammar& grammar() const { return grammar_; }
  EnvId env_id() const { return env_; }
  const RLParams& rl() const { return rl_; }
  int n_episodes() const { return n_episodes_; }

 private:
  ObliqueGrammar grammar_;
  EnvId env_;
  RLParams rl_;
  int n_episodes_;
};

}  // namespace qdt
