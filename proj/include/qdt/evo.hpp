#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qdt/eval.hpp"
#include "qdt/grammar.hpp"
#include "qdt/rng.hpp"

namespace qdt {

struct GEConfig {
  int n_pop = 200;
  long long total_pop = 10000;
  int tournament_k = 2;
  double p_cx = 0.1;
  double p_mu = 1.0;
  double per_gene_mutation_rate = 0.01;
  int genotype_size = 100;
  std::uint32_t max_value = 40000;
  int n_threads = 1;

  void validate() const;  // throws std::invalid_argument
};

enum class OobPolicy { discard, clamp };

struct MEConfig {
  int bins_per_dim = 10;
  double behavioral_min = 0.8;
  double behavioral_max = 1.0;
  double structural_min = 1.0;
  double structural_max = 10.0;
  long long total_pop = 10000;
  int batch_n = 20;
  int init_pop = 200;
  double per_gene_mutation_rate = 0.01;
  int genotype_size = 100;
  std::uint32_t max_value = 40000;
  OobPolicy oob = OobPolicy::discard;
  int n_threads = 1;

  void validate() const;
};

// Uniform per-gene replacement: each gene is independently redrawn from
// [0, max_value] with probability per_gene_rate.
Genotype mutate(const Genotype& genotype, double per_gene_rate, Rng& rng);

// One-point crossover at a fixed cut in [0, size].
std::pair<Genotype, Genotype> crossover_at(const Genotype& p1,
                                           const Genotype& p2,
                                           std::size_t cut);
std::pair<Genotype, Genotype> crossover(const Genotype& p1, const Genotype& p2,
                                        Rng& rng);

// k uniform draws with replacement; highest fitness wins, ties keep the
// first sampled.
const ScoredIndividual& tournament_select(
    std::span<const ScoredIndividual> population, int k, Rng& rng);

struct GridCoords {
  int entropy_bin = 0;
  int depth_bin = 0;
};

// Bins a descriptor into the archive grid: each dimension is split into
// bins_per_dim equally wide bins; a value exactly at the upper bound lands in
// the last bin. Out-of-bounds descriptors yield nullopt under
// OobPolicy::discard and are clamped to the edge bins under clamp.
std::optional<GridCoords> descriptor_coords(double entropy, double depth,
                                            const MEConfig& config);

class Archive {
 public:
  struct Cell {
    Genotype genotype;
    double fitness = 0.0;
    double entropy = 0.0;
    int depth = 0;
    std::uint64_t eval_seed = 0;
  };

  explicit Archive(const MEConfig& config);

  // Inserts under the elite rule: empty cell accepts anything; an occupied
  // cell is replaced only on strict fitness improvement. Invalid individuals
  // and out-of-bounds descriptors are never stored. Returns whether stored.
  bool insert(const ScoredIndividual& individual);

  const Cell* at(int entropy_bin, int depth_bin) const;
  int bins_per_dim() const { return config_.bins_per_dim; }
  std::size_t capacity() const { return cells_.size(); }
  std::size_t occupied() const;
  double coverage() const;
  double best_fitness(double if_empty) const;

  // Occupied cells in row-major (entropy_bin, depth_bin) order.
  std::vector<std::pair<GridCoords, const Cell*>> cells() const;

 private:
  MEConfig config_;
  std::vector<std::optional<Cell>> cells_;
};

using EvalFn =
    std::function<ScoredIndividual(const Genotype&, std::uint64_t eval_seed)>;

struct TrendPoint {
  long long evaluations = 0;
  double best_fitness = 0.0;
};

struct CoveragePoint {
  long long evaluations = 0;
  double coverage = 0.0;
};

struct GEResult {
  ScoredIndividual best;
  std::vector<TrendPoint> trend;
  std::vector<ScoredIndividual> final_population;
  std::vector<ScoredIndividual> eval_log;  // filled only when log_evals
};

// Elitist grammatical evolution: tournament parents, paired one-point
// crossover with probability p_cx, per-individual mutation with probability
// p_mu, survivors are the best n_pop of previous population plus offspring.
// Stops after exactly total_pop evaluations (the initial population counts).
GEResult run_ge(const GEConfig& config, const EvalFn& evaluate,
                std::uint64_t run_seed, bool log_evals = false);

struct MEResult {
  Archive archive;
  std::vector<TrendPoint> trend;
  std::vector<CoveragePoint> coverage_trend;
  std::vector<ScoredIndividual> eval_log;
};

// MAP-Elites: init_pop random genotypes seed the archive, then batches of
// batch_n elites drawn uniformly from the occupied cells are mutated,
// evaluated and reinserted until total_pop evaluations are spent.
MEResult run_map_elites(const MEConfig& config, const EvalFn& evaluate,
                        std::uint64_t run_seed, bool log_evals = false);

}  // namespace qdt
