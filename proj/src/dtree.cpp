#include "qdt/dtree.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>

namespace qdt {

namespace {

std::unique_ptr<TreeNode> clone_node(const TreeNode& node) {
  auto copy = std::make_unique<TreeNode>();
  copy->weights = node.weights;
  copy->threshold = node.threshold;
  copy->q = node.q;
  copy->q_updates = node.q_updates;
  copy->visited = node.visited;
  if (!node.is_leaf()) {
    copy->on_true = clone_node(*node.on_true);
    copy->on_false = clone_node(*node.on_false);
  }
  return copy;
}

std::unique_ptr<TreeNode> simplify_node(const TreeNode& node) {
  if (node.is_leaf()) return clone_node(node);
  const bool true_seen = node.on_true->visited;
  const bool false_seen = node.on_false->visited;
  if (true_seen && !false_seen) return simplify_node(*node.on_true);
  if (false_seen && !true_seen) return simplify_node(*node.on_false);
  // both outcomes taken (or the subtree was never executed): keep the split
  auto copy = std::make_unique<TreeNode>();
  copy->weights = node.weights;
  copy->threshold = node.threshold;
  copy->visited = node.visited;
  copy->on_true = simplify_node(*node.on_true);
  copy->on_false = simplify_node(*node.on_false);
  return copy;
}

int node_depth(const TreeNode& node) {
  if (node.is_leaf()) return 0;
  return 1 + std::max(node_depth(*node.on_true), node_depth(*node.on_false));
}

void count_nodes(const TreeNode& node, int& nodes, int& leaves) {
  ++nodes;
  if (node.is_leaf()) {
    ++leaves;
    return;
  }
  count_nodes(*node.on_true, nodes, leaves);
  count_nodes(*node.on_false, nodes, leaves);
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  out += buf;
}

void append_condition(std::string& out, const TreeNode& node) {
  for (std::size_t i = 0; i < node.weights.size(); ++i) {
    if (i == 0) {
      append_number(out, node.weights[i]);
    } else {
      out += node.weights[i] < 0 ? " - " : " + ";
      append_number(out, std::abs(node.weights[i]));
    }
    out += "*x" + std::to_string(i);
  }
  out += " < ";
  append_number(out, node.threshold);
}

void render_node(const TreeNode& node,
                 std::span<const std::string> action_names, int indent,
                 std::string& out) {
  const std::string pad(4 * static_cast<std::size_t>(indent), ' ');
  if (node.is_leaf()) {
    out += pad;
    out += action_names[static_cast<std::size_t>(greedy_action(node.q))];
    out += '\n';
    return;
  }
  out += pad + "if (";
  append_condition(out, node);
  out += ")\n";
  render_node(*node.on_true, action_names, indent + 1, out);
  out += pad + "else\n";
  render_node(*node.on_false, action_names, indent + 1, out);
}

}  // namespace

DecisionTree::DecisionTree(std::unique_ptr<TreeNode> root, int n_inputs,
                           int n_actions)
    : root_(std::move(root)), n_inputs_(n_inputs), n_actions_(n_actions) {
  assert(root_ != nullptr);
}

DecisionTree::DecisionTree(const DecisionTree& other)
    : root_(clone_node(other.root())),
      n_inputs_(other.n_inputs_),
      n_actions_(other.n_actions_) {}

DecisionTree& DecisionTree::operator=(const DecisionTree& other) {
  if (this != &other) {
    root_ = clone_node(other.root());
    n_inputs_ = other.n_inputs_;
    n_actions_ = other.n_actions_;
  }
  return *this;
}

int DecisionTree::leaf_count() const {
  int nodes = 0, leaves = 0;
  count_nodes(*root_, nodes, leaves);
  return leaves;
}

int DecisionTree::node_count() const {
  int nodes = 0, leaves = 0;
  count_nodes(*root_, nodes, leaves);
  return nodes;
}

TreeNode& route(DecisionTree& tree, std::span<const double> observation) {
  assert(static_cast<int>(observation.size()) == tree.n_inputs());
  TreeNode* node = &tree.root();
  node->visited = true;
  while (!node->is_leaf()) {
    double dot = 0.0;
    for (std::size_t i = 0; i < node->weights.size(); ++i)
      dot += node->weights[i] * observation[i];
    node = dot < node->threshold ? node->on_true.get() : node->on_false.get();
    node->visited = true;
  }
  return *node;
}

void init_q(DecisionTree& tree, const RLParams& params, Rng& rng) {
  std::uniform_real_distribution<double> dist(params.q_init_low,
                                              params.q_init_high);
  const bool degenerate = params.q_init_low == params.q_init_high;
  auto walk = [&](auto&& self, TreeNode& node) -> void {
    if (node.is_leaf()) {
      for (double& v : node.q) v = degenerate ? params.q_init_low : dist(rng);
      return;
    }
    self(self, *node.on_true);
    self(self, *node.on_false);
  };
  walk(walk, tree.root());
}

int greedy_action(std::span<const double> q) {
  assert(!q.empty());
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)])
      best = a;  // strict >, so ties keep the lowest index
  return best;
}

int select_action(const TreeNode& leaf, double epsilon, Rng& rng) {
  assert(leaf.is_leaf());
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(
          0, static_cast<int>(leaf.q.size()) - 1);
      return pick(rng);
    }
  }
  return greedy_action(leaf.q);
}

void q_update(TreeNode& prev_leaf, int action, double reward,
              const TreeNode* next_leaf, const RLParams& params) {
  assert(prev_leaf.is_leaf());
  if (params.learning_rate == 0.0) return;
  double bootstrap = 0.0;
  if (next_leaf != nullptr)
    bootstrap = *std::max_element(next_leaf->q.begin(), next_leaf->q.end());
  double step = params.learning_rate;
  if (params.lr_schedule == LrSchedule::sample_average) {
    if (prev_leaf.q_updates.size() != prev_leaf.q.size())
      prev_leaf.q_updates.assign(prev_leaf.q.size(), 0);
    const auto k = ++prev_leaf.q_updates[static_cast<std::size_t>(action)];
    step = 1.0 / static_cast<double>(k + 1);
  }
  double& qa = prev_leaf.q[static_cast<std::size_t>(action)];
  qa += step * (reward + params.discount * bootstrap - qa);
}

DecisionTree simplify(const DecisionTree& tree) {
  return DecisionTree(simplify_node(tree.root()), tree.n_inputs(),
                      tree.n_actions());
}

int depth(const DecisionTree& tree) { return node_depth(tree.root()); }

namespace {

int visited_depth_node(const TreeNode& node) {
  if (node.is_leaf() || !node.visited) return 0;
  const int t =
      node.on_true->visited ? visited_depth_node(*node.on_true) : 0;
  const int f =
      node.on_false->visited ? visited_depth_node(*node.on_false) : 0;
  return 1 + std::max(t, f);
}

}  // namespace

int visited_depth(const DecisionTree& tree) {
  return visited_depth_node(tree.root());
}

bool same_structure(const TreeNode& a, const TreeNode& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.weights != b.weights || a.threshold != b.threshold || a.q != b.q ||
      a.visited != b.visited)
    return false;
  if (a.is_leaf()) return true;
  return same_structure(*a.on_true, *b.on_true) &&
         same_structure(*a.on_false, *b.on_false);
}

bool same_structure(const DecisionTree& a, const DecisionTree& b) {
  return a.n_inputs() == b.n_inputs() && a.n_actions() == b.n_actions() &&
         same_structure(a.root(), b.root());
}

std::string render(const DecisionTree& tree,
                   std::span<const std::string> action_names) {
  assert(static_cast<int>(action_names.size()) == tree.n_actions());
  std::string out;
  render_node(tree.root(), action_names, 0, out);
  return out;
}

}  // namespace qdt
