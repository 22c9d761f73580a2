#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qdt/envs.hpp"
#include "qdt/eval.hpp"
#include "qdt/evo.hpp"

namespace qdt {

enum class Algo { ge, me };

Algo parse_algo(const std::string& name);  // throws on unknown name
std::string algo_name(Algo algo);

// Full experiment description. Defaults depend on the (algorithm,
// environment) pair; see defaults().
struct ExperimentConfig {
  Algo algorithm = Algo::me;
  EnvId environment = EnvId::cartpole;
  int n_runs = 5;
  std::uint64_t master_seed = 1;
  int n_threads = 1;
  bool log_all_evals = false;

  // genome + variation operators
  int genotype_size = 100;
  std::uint32_t max_value = 40000;
  double per_gene_mutation_rate = 0.01;

  // grammatical evolution
  int n_pop = 200;
  long long total_pop = 10000;
  int tournament_k = 2;
  double p_cx = 0.1;
  double p_mu = 1.0;

  // MAP-Elites
  int bins_per_dim = 10;
  double behavioral_min = 0.8;
  double behavioral_max = 1.0;
  double structural_min = 1.0;
  double structural_max = 10.0;
  int batch_n = 20;
  int init_pop = 200;
  OobPolicy oob = OobPolicy::discard;

  // leaf Q-learning + episode protocol
  RLParams rl;
  int n_episodes = 100;

  static ExperimentConfig defaults(Algo algo, EnvId env);

  // Sets one field from its config-file key; throws std::invalid_argument on
  // an unknown key or unparsable value.
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  GEConfig ge_config() const;
  MEConfig me_config() const;
  ObliqueGrammar make_grammar() const;
  Evaluator make_evaluator() const;

  // Flat key=value form; parseable by apply(). Fixed key order.
  std::string to_key_values() const;
};

// key=value lines in file order; '#' comments and blank lines are skipped.
std::vector<std::pair<std::string, std::string>> parse_key_value_file(
    const std::string& path);

ExperimentConfig read_config_snapshot(const std::string& path);

// Runs n_runs replicates with seeds master_seed + r. Each replicate writes
// its own directory out_dir/run_<r>/ containing trend.csv, config.snapshot,
// run_meta.txt, and archive.csv + coverage.csv (ME) or population.csv (GE);
// evals.csv is added when log_all_evals is on. The config is validated and
// all directories are created before any evaluation happens.
void run_experiment(const ExperimentConfig& config, const std::string& out_dir);

// Replays a GE run's evaluation log (evals.csv) through the archive insertion
// rules and writes ge_map.csv next to it, in archive.csv format.
void project_ge_map(const std::string& run_dir);

// Per-bin mean (over the runs where the bin is occupied) and max maps, plus
// mean/std of the best-fitness trends. Inputs are run directories, or parent
// directories whose run_* children are used. All runs must share a config
// except for the seed.
void aggregate_runs(const std::vector<std::string>& dirs,
                    const std::string& out_dir);

struct ExportTarget {
  bool best = false;  // otherwise the (entropy_bin, depth_bin) cell
  int entropy_bin = 0;
  int depth_bin = 0;
};

// Re-evaluates the referenced elite with its stored seed, simplifies, renders
// and writes <run_dir>/tree.txt. Returns the path written.
std::string export_tree(const std::string& run_dir, const ExportTarget& target);

// ---- CSV formats (shared with tests) ----

std::string format_double(double v);  // round-trippable, 17 significant digits

struct ArchiveRow {
  int entropy_bin = 0;
  int depth_bin = 0;
  double fitness = 0.0;
  double entropy = 0.0;
  int depth = 0;
  std::uint64_t eval_seed = 0;
  std::string genotype;
};
std::vector<ArchiveRow> read_archive_csv(const std::string& path);

struct TrendRow {
  long long evaluations = 0;
  double best_fitness = 0.0;
};
std::vector<TrendRow> read_trend_csv(const std::string& path);

struct IndividualRow {
  long long index = -1;  // eval_index column, present in evals.csv only
  double fitness = 0.0;
  double entropy = 0.0;
  int depth = 0;
  bool valid = false;
  std::uint64_t eval_seed = 0;
  std::string genotype;
};
std::vector<IndividualRow> read_individuals_csv(const std::string& path,
                                                bool has_index);

}  // namespace qdt
