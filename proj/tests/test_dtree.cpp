#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "qdt/dtree.hpp"
#include "qdt/grammar.hpp"

using namespace qdt;

namespace {

std::unique_ptr<TreeNode> leaf(std::vector<double> q) {
  auto n = std::make_unique<TreeNode>();
  n->q = std::move(q);
  return n;
}

std::unique_ptr<TreeNode> condition(std::vector<double> weights, double threshold,
                                    std::unique_ptr<TreeNode> on_true,
                                    std::unique_ptr<TreeNode> on_false) {
  auto n = std::make_unique<TreeNode>();
  n->weights = std::move(weights);
  n->threshold = threshold;
  n->on_true = std::move(on_true);
  n->on_false = std::move(on_false);
  return n;
}

// "6x < 3" with distinguishable leaves
DecisionTree six_x_tree() {
  return DecisionTree(
      condition({6.0}, 3.0, leaf({1.0, 0.0}), leaf({0.0, 1.0})), 1, 2);
}

}  // namespace

TEST_SUITE("dtree") {

TEST_CASE("route follows the strict inequality and marks the path") {
  DecisionTree tree = six_x_tree();
  const double x0[] = {0.0};
  TreeNode& reached = route(tree, x0);  // 0 < 3
  CHECK(&reached == tree.root().on_true.get());
  CHECK(tree.root().visited);
  CHECK(tree.root().on_true->visited);
  CHECK(!tree.root().on_false->visited);

  const double x1[] = {1.0};
  CHECK(&route(tree, x1) == tree.root().on_false.get());  // 6 >= 3
  CHECK(tree.root().on_false->visited);
}

TEST_CASE("published-style cartpole split routes (0,0,0,0) to the true branch") {
  DecisionTree tree(
      condition({-0.233, -0.753, -0.842, -0.919}, 0.008, leaf({0.0, 1.0}),
                leaf({1.0, 0.0})),
      4, 2);
  const double origin[] = {0.0, 0.0, 0.0, 0.0};
  CHECK(&route(tree, origin) == tree.root().on_true.get());  // 0 < 0.008
}

TEST_CASE("init_q draws inside the bounds and is seed-reproducible") {
  ObliqueGrammar grammar = ObliqueGrammar::standard(4, 2);
  Rng gen(123);
  Genotype g = random_genotype(100, 40000, gen);
  auto tree = translate(g, grammar);
  while (!tree) {  // skip genomes whose derivation runs out of genes
    g = random_genotype(100, 40000, gen);
    tree = translate(g, grammar);
  }

  RLParams params;  // [-1, 1]
  Rng rng_a(42);
  init_q(*tree, params, rng_a);
  auto collect = [](const DecisionTree& t) {
    std::vector<double> qs;
    auto walk = [&](auto&& self, const TreeNode& n) -> void {
      if (n.is_leaf()) {
        qs.insert(qs.end(), n.q.begin(), n.q.end());
        return;
      }
      self(self, *n.on_true);
      self(self, *n.on_false);
    };
    walk(walk, t.root());
    return qs;
  };
  const auto qs = collect(*tree);
  for (const double q : qs) {
    CHECK(q >= -1.0);
    CHECK(q <= 1.0);
  }

  auto tree2 = translate(g, grammar);
  Rng rng_b(42);
  init_q(*tree2, params, rng_b);
  CHECK(collect(*tree2) == qs);

  // degenerate interval pins the table
  RLParams zero = params;
  zero.q_init_low = zero.q_init_high = 0.0;
  Rng rng_c(42);
  init_q(*tree2, zero, rng_c);
  for (const double q : collect(*tree2)) CHECK(q == 0.0);
}

TEST_CASE("greedy selection and tie-breaking") {
  Rng rng(1);
  TreeNode l;
  l.q = {0.2, 0.9};
  CHECK(select_action(l, 0.0, rng) == 1);
  l.q = {0.5, 0.5, 0.1};
  CHECK(select_action(l, 0.0, rng) == 0);  // tie -> lowest index
}

TEST_CASE("epsilon=1 selects uniformly (binomial 3-sigma check)") {
  Rng rng(2024);
  TreeNode l;
  l.q = {5.0, 0.0, -1.0};  // greedy would always pick 0
  const int n = 100000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(select_action(l, 1.0, rng))];
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  for (const int c : counts) CHECK(std::abs(c - n * p) <= 3.0 * sigma);
}

TEST_CASE("q_update one-step arithmetic") {
  RLParams p;
  p.learning_rate = 0.001;
  p.discount = 0.0;
  TreeNode l;
  l.q = {0.0, 0.0};
  q_update(l, 0, 1.0, &l, p);
  CHECK(l.q[0] == doctest::Approx(0.001).epsilon(1e-12));

  // terminal transition bootstraps 0
  RLParams p2;
  p2.learning_rate = 1.0;
  p2.discount = 0.9;
  TreeNode l2;
  l2.q = {0.0};
  q_update(l2, 0, -1.0, nullptr, p2);
  CHECK(l2.q[0] == -1.0);
}

TEST_CASE("q_update with learning_rate 0 is bitwise inert") {
  RLParams p;
  p.learning_rate = 0.0;
  TreeNode l;
  l.q = {-0.0, 0.25, -3.5};
  const auto before = l.q;
  TreeNode other;
  other.q = {9.0};
  q_update(l, 0, 5.0, &other, p);
  q_update(l, 2, -5.0, nullptr, p);
  for (std::size_t i = 0; i < l.q.size(); ++i) {
    CHECK(std::memcmp(&l.q[i], &before[i], sizeof(double)) == 0);
  }
}

TEST_CASE("q_update converges to the hand-solved chain fixed point") {
  // two single-action states, deterministic loop:
  //   A --(r=1)--> B --(r=0)--> A
  // Bellman: qa = 1 + y*qb, qb = 0 + y*qa; with y = 0.5:
  //   qa = 4/3, qb = 2/3
  RLParams p;
  p.learning_rate = 0.1;
  p.discount = 0.5;
  TreeNode a, b;
  a.q = {0.0};
  b.q = {0.0};
  for (int i = 0; i < 400; ++i) {
    q_update(a, 0, 1.0, &b, p);
    q_update(b, 0, 0.0, &a, p);
  }
  CHECK(std::abs(a.q[0] - 4.0 / 3.0) < 1e-3);
  CHECK(std::abs(b.q[0] - 2.0 / 3.0) < 1e-3);
}

TEST_CASE("simplify prunes never-taken branches and only those") {
  DecisionTree tree = six_x_tree();
  const double x0[] = {0.0};
  route(tree, x0);  // only the true branch is ever taken
  DecisionTree pruned = simplify(tree);
  CHECK(pruned.root().is_leaf());
  CHECK(pruned.root().q == std::vector<double>{1.0, 0.0});
  CHECK(depth(pruned) == 0);

  const double x1[] = {1.0};
  route(tree, x1);  // now both branches are visited
  DecisionTree full = simplify(tree);
  CHECK(!full.root().is_leaf());
  CHECK(depth(full) == 1);
  CHECK(same_structure(full, simplify(full)));  // idempotent
}

TEST_CASE("simplify on random executed trees: depth monotone, idempotent, replay-equal") {
  ObliqueGrammar grammar = ObliqueGrammar::standard(4, 2);
  Rng rng(99);
  std::uniform_real_distribution<double> obs_dist(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 300 && checked < 100; ++trial) {
    const Genotype g = random_genotype(100, 40000, rng);
    auto tree = translate(g, grammar);
    if (!tree) continue;
    ++checked;
    RLParams params;
    init_q(*tree, params, rng);

    std::vector<std::vector<double>> trace;
    for (int i = 0; i < 50; ++i) {
      std::vector<double> obs(4);
      for (auto& v : obs) v = obs_dist(rng);
      route(*tree, obs);
      trace.push_back(std::move(obs));
    }

    DecisionTree pruned = simplify(*tree);
    CHECK(depth(pruned) <= depth(*tree));
    CHECK(same_structure(simplify(pruned), pruned));

    for (const auto& obs : trace) {
      const TreeNode& a = route(*tree, obs);
      const TreeNode& b = route(pruned, obs);
      CHECK(greedy_action(a.q) == greedy_action(b.q));
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("depth counts condition levels") {
  // chain of k conditions always branching false
  auto chain = leaf({0.0, 0.0});
  for (int i = 0; i < 7; ++i)
    chain = condition({1.0}, 0.0, leaf({0.0, 0.0}), std::move(chain));
  DecisionTree tree(std::move(chain), 1, 2);
  CHECK(depth(tree) == 7);
}

TEST_CASE("render prints conditions and greedy action names") {
  const std::vector<std::string> names{"Push Left", "Push Right"};

  DecisionTree single(leaf({0.7, 0.1}), 4, 2);
  CHECK(render(single, names) == "Push Left\n");

  DecisionTree tree(
      condition({-0.233, -0.753, -0.842, -0.919}, 0.008, leaf({0.0, 1.0}),
                leaf({1.0, 0.0})),
      4, 2);
  const std::string text = render(tree, names);
  CHECK(text ==
        "if (-0.233*x0 - 0.753*x1 - 0.842*x2 - 0.919*x3 < 0.008)\n"
        "    Push Right\n"
        "else\n"
        "    Push Left\n");
}

TEST_CASE("rendered coefficients reparse to 3 decimals") {
  ObliqueGrammar grammar = ObliqueGrammar::standard(2, 3);
  Rng rng(7);
  const std::vector<std::string> names{"a", "b", "c"};
  for (int trial = 0; trial < 50; ++trial) {
    const Genotype g = random_genotype(100, 40000, rng);
    auto tree = translate(g, grammar);
    if (!tree) continue;
    const std::string text = render(*tree, names);
    // collect printed numbers and the tree's numbers in traversal order
    std::vector<double> printed;
    std::size_t pos = 0;
    while (pos < text.size()) {
      if ((text[pos] == '-' && pos + 1 < text.size() && std::isdigit(text[pos + 1])) ||
          std::isdigit(text[pos])) {
        // skip the xK variable names
        if (pos > 0 && text[pos - 1] == 'x') {
          while (pos < text.size() && std::isdigit(text[pos])) ++pos;
          continue;
        }
        char* end = nullptr;
        printed.push_back(std::strtod(text.c_str() + pos, &end));
        pos = static_cast<std::size_t>(end - text.c_str());
      } else {
        ++pos;
      }
    }
    std::vector<double> actual;
    auto walk = [&](auto&& self, const TreeNode& n) -> void {
      if (n.is_leaf()) return;
      for (std::size_t i = 0; i < n.weights.size(); ++i)
        actual.push_back(std::abs(n.weights[i]));  // sign joins the separator
      actual.push_back(std::abs(n.threshold));
      self(self, *n.on_true);
      self(self, *n.on_false);
    };
    walk(walk, tree->root());
    REQUIRE(printed.size() == actual.size());
    for (std::size_t i = 0; i < printed.size(); ++i)
      CHECK(std::abs(std::abs(printed[i]) - actual[i]) <= 5e-4);
  }
}

}  // TEST_SUITE
