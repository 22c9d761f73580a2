#include "qdt/eval.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <numeric>

namespace qdt {

double action_entropy(std::span<const std::int64_t> counts) {
  assert(counts.size() >= 2);
  double total = 0.0;
  for (const auto c : counts) {
    assert(c >= 0);
    total += static_cast<double>(c);
  }
  assert(total > 0.0);
  const double log_base = std::log(static_cast<double>(counts.size()));
  double entropy = 0.0;
  for (const auto c : counts) {
    if (c <= 0) continue;  // lim f->0 of f*log(f) is 0
    const double f = static_cast<double>(c) / total;
    entropy += f * (std::log(total / static_cast<double>(c)) / log_base);
  }
  return std::clamp(entropy, 0.0, 1.0);
}

std::pair<double, int> descriptor(const EvaluationResult& result) {
  assert(result.valid);
  return {result.entropy, result.tree_depth};
}

double EpisodeStats::mean_return() const {
  assert(!returns.empty());
  return std::accumulate(returns.begin(), returns.end(), 0.0) /
         static_cast<double>(returns.size());
}

EpisodeStats run_episodes(DecisionTree& tree, Environment& env,
                          const RLParams& rl, int n_episodes,
                          std::uint64_t eval_seed, Rng& agent_rng,
                          std::vector<std::vector<double>>* observation_log) {
  assert(n_episodes >= 1);
  assert(tree.n_inputs() == env.n_inputs() &&
         tree.n_actions() == env.n_actions());
  const bool norm = env.wants_normalized_observations();
  const auto bounds = env.observation_bounds();
  std::array<double, 8> scratch{};

  EpisodeStats stats;
  stats.action_counts.assign(static_cast<std::size_t>(env.n_actions()), 0);
  stats.returns.reserve(static_cast<std::size_t>(n_episodes));

  auto policy_view = [&](std::span<const double> raw) -> std::span<const double> {
    if (!norm) return raw;
    std::span<double> out{scratch.data(), raw.size()};
    normalize_observation(raw, bounds, out);
    return out;
  };

  for (int e = 0; e < n_episodes; ++e) {
    auto obs = policy_view(env.reset(mix_seed(eval_seed, 1 + static_cast<std::uint64_t>(e))));
    if (observation_log) observation_log->emplace_back(obs.begin(), obs.end());
    TreeNode* leaf = &route(tree, obs);
    double episode_return = 0.0;
    for (;;) {
      const int action = select_action(*leaf, rl.epsilon, agent_rng);
      const StepResult sr = env.step(action);
      ++stats.action_counts[static_cast<std::size_t>(action)];
      episode_return += sr.reward;
      if (sr.done) {
        q_update(*leaf, action, sr.reward, nullptr, rl);
        break;
      }
      const auto next_obs = policy_view(sr.observation);
      if (observation_log)
        observation_log->emplace_back(next_obs.begin(), next_obs.end());
      TreeNode* next_leaf = &route(tree, next_obs);
      q_update(*leaf, action, sr.reward, next_leaf, rl);
      leaf = next_leaf;
    }
    stats.returns.push_back(episode_return);
  }
  return stats;
}

Evaluator::Evaluator(ObliqueGrammar grammar, EnvId env, RLParams rl,
                     int n_episodes)
    : grammar_(std::move(grammar)), env_(env), rl_(rl), n_episodes_(n_episodes) {
  assert(n_episodes_ >= 1);
}

EvaluationResult Evaluator::evaluate(const Genotype& genotype,
                                     std::uint64_t eval_seed) const {
  EvaluationResult result;
  result.eval_seed = eval_seed;
  const auto env = make_environment(env_);
  auto tree = translate(genotype, grammar_);
  if (!tree) {
    result.valid = false;
    result.fitness = env->worst_return();
    return result;
  }
  Rng agent_rng(mix_seed(eval_seed, 0));
  init_q(*tree, rl_, agent_rng);
  const auto stats =
      run_episodes(*tree, *env, rl_, n_episodes_, eval_seed, agent_rng);
  result.valid = true;
  result.fitness = stats.mean_return();
  result.action_counts = stats.action_counts;
  result.entropy = action_entropy(result.action_counts);
  // structural descriptor: depth of the visited skeleton (pruning alone, no
  // collapse of one-sided conditions). The exported tree is the collapsed
  // form, which is never deeper.
  result.tree_depth = visited_depth(*tree);
  result.simplified_tree = simplify(*tree);
  return result;
}

ScoredIndividual Evaluator::score(const Genotype& genotype,
                                  std::uint64_t eval_seed) const {
  const auto full = evaluate(genotype, eval_seed);
  ScoredIndividual out;
  out.genotype = genotype;
  out.fitness = full.fitness;
  out.entropy = full.entropy;
  out.depth = full.tree_depth;
  out.valid = full.valid;
  out.eval_seed = eval_seed;
  return out;
}

}  // namespace qdt
