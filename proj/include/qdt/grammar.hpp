#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdt/dtree.hpp"
#include "qdt/rng.hpp"

namespace qdt {

// Fixed-length integer genome; gene values are capped inclusively at
// max_value.
struct Genotype {
  std::vector<std::uint32_t> genes;
  std::uint32_t max_value = 40000;

  bool within_cap() const;
  std::string to_text() const;  // "12;0;40000;..."
  static Genotype from_text(const std::string& text, std::uint32_t max_value);
};

Genotype random_genotype(std::size_t size, std::uint32_t max_value, Rng& rng);

// The oblique grammar. Structure is fixed:
//   Root      -> If                          (single alternative, no gene)
//   If        -> Condition, Action, Action
//   Condition -> sum_i const*x_i < const     (n_inputs + 1 const draws)
//   Action    -> Leaf | If                   (2 alternatives)
//   const     -> one of an evenly spaced pool of values
// Only the constant pool and the input/action counts are parameters.
class ObliqueGrammar {
 public:
  ObliqueGrammar(int n_inputs, int n_actions, double const_lo, double const_hi,
                 double const_step);

  // Constant pool [-1, 1] with step 0.001 (2001 values).
  static ObliqueGrammar standard(int n_inputs, int n_actions);

  int n_inputs() const { return n_inputs_; }
  int n_actions() const { return n_actions_; }
  const std::vector<double>& const_values() const { return const_values_; }

  // Largest alternative count over all rules; the genotype cap must reach it.
  std::size_t max_choices() const { return const_values_.size(); }

 private:
  int n_inputs_;
  int n_actions_;
  std::vector<double> const_values_;
};

// Decodes a genotype into a tree. Genes are consumed left to right in
// derivation order (depth-first, true-branch action before false-branch
// action; a condition draws its weights in input order, then its threshold).
// A decision point with l alternatives picks alternative (gene mod l);
// constants use the same rule over the pool. Trailing genes are ignored.
// Returns nullopt when the genes run out before the derivation completes.
std::optional<DecisionTree> translate(const Genotype& genotype,
                                      const ObliqueGrammar& grammar,
                                      std::size_t* consumed_genes = nullptr);

}  // namespace qdt
