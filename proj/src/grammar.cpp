#include "qdt/grammar.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace qdt {

bool Genotype::within_cap() const {
  for (const auto g : genes)
    if (g > max_value) return false;
  return true;
}

std::string Genotype::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(genes[i]);
  }
  return out;
}

Genotype Genotype::from_text(const std::string& text, std::uint32_t max_value) {
  Genotype g;
  g.max_value = max_value;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string::npos) end = text.size();
    const std::string token = text.substr(pos, end - pos);
    if (token.empty()) throw std::invalid_argument("empty gene in genotype text");
    std::size_t used = 0;
    const unsigned long v = std::stoul(token, &used);
    if (used != token.size() || v > max_value)
      throw std::invalid_argument("bad gene value: " + token);
    g.genes.push_back(static_cast<std::uint32_t>(v));
    pos = end + 1;
    if (end == text.size()) break;
  }
  return g;
}

Genotype random_genotype(std::size_t size, std::uint32_t max_value, Rng& rng) {
  Genotype g;
  g.max_value = max_value;
  g.genes.resize(size);
  std::uniform_int_distribution<std::uint32_t> dist(0, max_value);
  for (auto& v : g.genes) v = dist(rng);
  return g;
}

ObliqueGrammar::ObliqueGrammar(int n_inputs, int n_actions, double const_lo,
                               double const_hi, double const_step)
    : n_inputs_(n_inputs), n_actions_(n_actions) {
  if (n_inputs < 1 || n_actions < 1)
    throw std::invalid_argument("grammar needs at least 1 input and 1 action");
  if (!(const_hi > const_lo) || !(const_step > 0.0))
    throw std::invalid_argument("bad constant pool bounds");
  const auto n =
      static_cast<std::size_t>(std::llround((const_hi - const_lo) / const_step)) + 1;
  const_values_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    const_values_[i] =
        const_lo + (const_hi - const_lo) * static_cast<double>(i) /
                       static_cast<double>(n - 1);
}

ObliqueGrammar ObliqueGrammar::standard(int n_inputs, int n_actions) {
  return ObliqueGrammar(n_inputs, n_actions, -1.0, 1.0, 0.001);
}

namespace {

struct GeneCursor {
  std::span<const std::uint32_t> genes;
  std::size_t pos = 0;
  bool exhausted = false;

  std::uint32_t next() {
    if (pos >= genes.size()) {
      exhausted = true;
      return 0;
    }
    return genes[pos++];
  }
};

std::unique_ptr<TreeNode> derive_action(GeneCursor& cur,
                                        const ObliqueGrammar& g);

std::unique_ptr<TreeNode> derive_if(GeneCursor& cur, const ObliqueGrammar& g) {
  const auto& pool = g.const_values();
  const auto l = static_cast<std::uint32_t>(pool.size());
  auto node = std::make_unique<TreeNode>();
  node->weights.resize(static_cast<std::size_t>(g.n_inputs()));
  for (auto& w : node->weights) w = pool[cur.next() % l];
  node->threshold = pool[cur.next() % l];
  node->on_true = derive_action(cur, g);
  node->on_false = derive_action(cur, g);
  return node;
}

std::unique_ptr<TreeNode> derive_action(GeneCursor& cur,
                                        const ObliqueGrammar& g) {
  const std::uint32_t choice = cur.next() % 2;  // 0: leaf, 1: if
  if (cur.exhausted) return std::make_unique<TreeNode>();
  if (choice == 0) {
    auto leaf = std::make_unique<TreeNode>();
    leaf->q.assign(static_cast<std::size_t>(g.n_actions()), 0.0);
    return leaf;
  }
  return derive_if(cur, g);
}

}  // namespace

std::optional<DecisionTree> translate(const Genotype& genotype,
                                      const ObliqueGrammar& grammar,
                                      std::size_t* consumed_genes) {
  assert(genotype.within_cap());
  GeneCursor cur{genotype.genes};
  auto root = derive_if(cur, grammar);  // the root rule itself consumes no gene
  if (consumed_genes) *consumed_genes = cur.pos;
  if (cur.exhausted) return std::nullopt;
  return DecisionTree(std::move(root), grammar.n_inputs(),
                      grammar.n_actions());
}

}  // namespace qdt
