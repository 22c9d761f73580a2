#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qdt/rng.hpp"

namespace qdt {

// One node of an oblique decision tree. Internal nodes test
// dot(weights, observation) < threshold; leaves hold one Q-value per action.
struct TreeNode {
  std::vector<double> weights;
  double threshold = 0.0;
  std::unique_ptr<TreeNode> on_true;
  std::unique_ptr<TreeNode> on_false;
  std::vector<double> q;
  std::vector<std::uint32_t> q_updates;  // per-action update counts
  bool visited = false;

  bool is_leaf() const { return on_true == nullptr; }
};

class DecisionTree {
 public:
  DecisionTree(std::unique_ptr<TreeNode> root, int n_inputs, int n_actions);
  DecisionTree(const DecisionTree& other);
  DecisionTree& operator=(const DecisionTree& other);
  DecisionTree(DecisionTree&&) = default;
  DecisionTree& operator=(DecisionTree&&) = default;

  TreeNode& root() { return *root_; }
  const TreeNode& root() const { return *root_; }
  int n_inputs() const { return n_inputs_; }
  int n_actions() const { return n_actions_; }
  int leaf_count() const;
  int node_count() const;

 private:
  std::unique_ptr<TreeNode> root_;
  int n_inputs_;
  int n_actions_;
};

// Step-size schedule for the leaf Q-updates.
//   fixed           q += learning_rate * (target - q)
//   sample_average  q += (target - q) / (1 + k), k = updates so far to this
//                   action (the random init counts as the first sample), so
//                   each Q-value is the running mean of init and targets.
// sample_average converges and then holds the greedy action still within an
// evaluation, which is what makes low-entropy behaviors reachable; fixed is
// the classic constant-step rule. learning_rate == 0 disables updates under
// either schedule.
enum class LrSchedule { fixed, sample_average };

struct RLParams {
  double epsilon = 0.05;
  double learning_rate = 0.001;
  double discount = 0.9;
  double q_init_low = -1.0;
  double q_init_high = 1.0;
  LrSchedule lr_schedule = LrSchedule::fixed;
};

// Descends from the root, marking every node on the path as visited, and
// returns the leaf the observation falls into.
TreeNode& route(DecisionTree& tree, std::span<const double> observation);

// Draws every leaf's Q-values i.i.d. uniform in [q_init_low, q_init_high],
// in depth-first (true branch first) leaf order.
void init_q(DecisionTree& tree, const RLParams& params, Rng& rng);

// Lowest index among the maximal Q-values.
int greedy_action(std::span<const double> q);

// Epsilon-greedy: uniform random action with probability epsilon, greedy
// otherwise. Draws from the rng only when epsilon > 0.
int select_action(const TreeNode& leaf, double epsilon, Rng& rng);

// One-step Q-learning update on prev_leaf. next_leaf == nullptr means the
// transition was terminal (bootstrap 0).
void q_update(TreeNode& prev_leaf, int action, double reward,
              const TreeNode* next_leaf, const RLParams& params);

// Copy of the tree with never-taken branches pruned: a condition with exactly
// one visited child collapses to that child's simplified subtree. Routing on
// any observation that stays within the visited region is unchanged.
DecisionTree simplify(const DecisionTree& tree);

// Number of condition levels on the longest root-to-leaf path. A lone leaf
// has depth 0; one condition over two leaves has depth 1.
int depth(const DecisionTree& tree);

// Depth of the visited skeleton of an executed tree: condition levels along
// paths of visited nodes only. A visited condition counts as a level even
// when just one of its branches was ever taken, so this can exceed
// depth(simplify(tree)). This is the structural descriptor.
int visited_depth(const DecisionTree& tree);

bool same_structure(const TreeNode& a, const TreeNode& b);
bool same_structure(const DecisionTree& a, const DecisionTree& b);

// Indented text form: conditions as "w0*x0 + w1*x1 < t" (3 decimals), leaves
// as the name of their greedy action.
std::string render(const DecisionTree& tree,
                   std::span<const std::string> action_names);

}  // namespace qdt
