#include "qdt/evo.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace qdt {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Index-order results regardless of scheduling, so runs are reproducible for
// any thread count.
void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t)>& body) {
  if (n_threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void GEConfig::validate() const {
  check(n_pop >= 2, "n_pop must be at least 2");
  check(n_pop % 2 == 0, "n_pop must be even (offspring are built in pairs)");
  check(total_pop >= n_pop, "total_pop must be at least n_pop");
  check(tournament_k >= 1, "tournament size must be at least 1");
  check(p_cx >= 0.0 && p_cx <= 1.0, "p_cx must lie in [0,1]");
  check(p_mu >= 0.0 && p_mu <= 1.0, "p_mu must lie in [0,1]");
  check(per_gene_mutation_rate > 0.0 && per_gene_mutation_rate <= 1.0,
        "per-gene mutation rate must lie in (0,1]");
  check(genotype_size >= 1, "genotype_size must be positive");
  check(n_threads >= 1, "n_threads must be positive");
}

void MEConfig::validate() const {
  check(bins_per_dim >= 1, "bins_per_dim must be positive");
  check(behavioral_min < behavioral_max, "behavioral bounds must be ordered");
  check(structural_min < structural_max, "structural bounds must be ordered");
  check(init_pop >= 1, "init_pop must be positive");
  check(batch_n >= 1, "batch_n must be positive");
  check(batch_n <= init_pop, "batch_n must not exceed init_pop");
  check(total_pop >= init_pop, "total_pop must be at least init_pop");
  check(per_gene_mutation_rate > 0.0 && per_gene_mutation_rate <= 1.0,
        "per-gene mutation rate must lie in (0,1]");
  check(genotype_size >= 1, "genotype_size must be positive");
  check(n_threads >= 1, "n_threads must be positive");
}

Genotype mutate(const Genotype& genotype, double per_gene_rate, Rng& rng) {
  assert(per_gene_rate > 0.0 && per_gene_rate <= 1.0);
  Genotype out = genotype;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> fresh(0, genotype.max_value);
  for (auto& gene : out.genes)
    if (u01(rng) < per_gene_rate) gene = fresh(rng);
  return out;
}

std::pair<Genotype, Genotype> crossover_at(const Genotype& p1,
                                           const Genotype& p2,
                                           std::size_t cut) {
  assert(p1.genes.size() == p2.genes.size() && cut <= p1.genes.size());
  Genotype c1 = p2;
  Genotype c2 = p1;
  std::copy(p1.genes.begin(), p1.genes.begin() + static_cast<std::ptrdiff_t>(cut),
            c1.genes.begin());
  std::copy(p2.genes.begin(), p2.genes.begin() + static_cast<std::ptrdiff_t>(cut),
            c2.genes.begin());
  return {std::move(c1), std::move(c2)};
}

std::pair<Genotype, Genotype> crossover(const Genotype& p1, const Genotype& p2,
                                        Rng& rng) {
  std::uniform_int_distribution<std::size_t> cut(0, p1.genes.size());
  return crossover_at(p1, p2, cut(rng));
}

const ScoredIndividual& tournament_select(
    std::span<const ScoredIndividual> population, int k, Rng& rng) {
  assert(!population.empty() && k >= 1);
  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  const ScoredIndividual* best = &population[pick(rng)];
  for (int i = 1; i < k; ++i) {
    const ScoredIndividual& candidate = population[pick(rng)];
    if (candidate.fitness > best->fitness) best = &candidate;
  }
  return *best;
}

std::optional<GridCoords> descriptor_coords(double entropy, double depth,
                                            const MEConfig& config) {
  const int m = config.bins_per_dim;
  auto bin = [m, oob = config.oob](double d, double lo,
                                   double hi) -> std::optional<int> {
    if (d < lo || d > hi) {
      if (oob == OobPolicy::discard) return std::nullopt;
      return d < lo ? 0 : m - 1;
    }
    if (d == hi) return m - 1;  // the top edge closes the last bin
    const double width = (hi - lo) / m;
    const int idx = static_cast<int>(std::floor((d - lo) / width));
    return std::clamp(idx, 0, m - 1);
  };
  const auto e = bin(entropy, config.behavioral_min, config.behavioral_max);
  const auto s = bin(depth, config.structural_min, config.structural_max);
  if (!e || !s) return std::nullopt;
  return GridCoords{*e, *s};
}

Archive::Archive(const MEConfig& config) : config_(config) {
  // only the grid geometry matters here; budgets are the driver's concern
  check(config_.bins_per_dim >= 1, "bins_per_dim must be positive");
  check(config_.behavioral_min < config_.behavioral_max,
        "behavioral bounds must be ordered");
  check(config_.structural_min < config_.structural_max,
        "structural bounds must be ordered");
  const auto m = static_cast<std::size_t>(config_.bins_per_dim);
  cells_.resize(m * m);
}

bool Archive::insert(const ScoredIndividual& individual) {
  if (!individual.valid) return false;
  const auto coords = descriptor_coords(
      individual.entropy, static_cast<double>(individual.depth), config_);
  if (!coords) return false;
  auto& cell = cells_[static_cast<std::size_t>(coords->entropy_bin) *
                          static_cast<std::size_t>(config_.bins_per_dim) +
                      static_cast<std::size_t>(coords->depth_bin)];
  if (cell && cell->fitness >= individual.fitness) return false;
  cell = Cell{individual.genotype, individual.fitness, individual.entropy,
              individual.depth, individual.eval_seed};
  return true;
}

const Archive::Cell* Archive::at(int entropy_bin, int depth_bin) const {
  const auto& cell = cells_[static_cast<std::size_t>(entropy_bin) *
                                static_cast<std::size_t>(config_.bins_per_dim) +
                            static_cast<std::size_t>(depth_bin)];
  return cell ? &*cell : nullptr;
}

std::size_t Archive::occupied() const {
  std::size_t n = 0;
  for (const auto& c : cells_)
    if (c) ++n;
  return n;
}

double Archive::coverage() const {
  return static_cast<double>(occupied()) / static_cast<double>(cells_.size());
}

double Archive::best_fitness(double if_empty) const {
  double best = if_empty;
  bool any = false;
  for (const auto& c : cells_) {
    if (!c) continue;
    if (!any || c->fitness > best) best = c->fitness;
    any = true;
  }
  return best;
}

std::vector<std::pair<GridCoords, const Archive::Cell*>> Archive::cells() const {
  std::vector<std::pair<GridCoords, const Cell*>> out;
  const int m = config_.bins_per_dim;
  for (int e = 0; e < m; ++e)
    for (int d = 0; d < m; ++d)
      if (const Cell* cell = at(e, d)) out.push_back({GridCoords{e, d}, cell});
  return out;
}

namespace {

// Shared evaluation bookkeeping: assigns each new individual the next global
// evaluation seed and commits results in creation order.
struct EvalDispatcher {
  const EvalFn& evaluate;
  std::uint64_t eval_base;
  int n_threads;
  long long done = 0;

  std::vector<ScoredIndividual> run(const std::vector<Genotype>& batch) {
    std::vector<ScoredIndividual> out(batch.size());
    parallel_for(batch.size(), n_threads, [&](std::size_t i) {
      out[i] = evaluate(batch[i],
                        mix_seed(eval_base, static_cast<std::uint64_t>(
                                                done + static_cast<long long>(i))));
    });
    done += static_cast<long long>(batch.size());
    return out;
  }
};

}  // namespace

GEResult run_ge(const GEConfig& config, const EvalFn& evaluate,
                std::uint64_t run_seed, bool log_evals) {
  config.validate();
  Rng driver(mix_seed(run_seed, 0));
  EvalDispatcher dispatcher{evaluate, mix_seed(run_seed, 1), config.n_threads};
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  GEResult result;
  auto log = [&](const std::vector<ScoredIndividual>& scored) {
    if (log_evals)
      result.eval_log.insert(result.eval_log.end(), scored.begin(), scored.end());
  };

  std::vector<Genotype> seeds;
  seeds.reserve(static_cast<std::size_t>(config.n_pop));
  for (int i = 0; i < config.n_pop; ++i)
    seeds.push_back(random_genotype(static_cast<std::size_t>(config.genotype_size),
                                    config.max_value, driver));
  std::vector<ScoredIndividual> population = dispatcher.run(seeds);
  log(population);

  double best_so_far = population.front().fitness;
  for (const auto& ind : population) best_so_far = std::max(best_so_far, ind.fitness);
  result.trend.push_back({dispatcher.done, best_so_far});

  while (dispatcher.done < config.total_pop) {
    const long long remaining = config.total_pop - dispatcher.done;
    const int n_new = static_cast<int>(
        std::min<long long>(config.n_pop, remaining));

    std::vector<Genotype> offspring;
    offspring.reserve(static_cast<std::size_t>(n_new));
    for (int i = 0; i < n_new; ++i)
      offspring.push_back(
          tournament_select(population, config.tournament_k, driver).genotype);
    for (int i = 0; i + 1 < n_new; i += 2) {
      if (u01(driver) < config.p_cx) {
        auto [c1, c2] = crossover(offspring[static_cast<std::size_t>(i)],
                                  offspring[static_cast<std::size_t>(i) + 1], driver);
        offspring[static_cast<std::size_t>(i)] = std::move(c1);
        offspring[static_cast<std::size_t>(i) + 1] = std::move(c2);
      }
    }
    for (auto& child : offspring)
      if (u01(driver) < config.p_mu)
        child = mutate(child, config.per_gene_mutation_rate, driver);

    std::vector<ScoredIndividual> scored = dispatcher.run(offspring);
    log(scored);

    // survivors: best n_pop of previous population plus offspring; on fitness
    // ties offspring go first, then earlier creation
    struct Ranked {
      const ScoredIndividual* ind;
      bool is_offspring;
      std::size_t order;
    };
    std::vector<Ranked> merged;
    merged.reserve(population.size() + scored.size());
    for (std::size_t i = 0; i < population.size(); ++i)
      merged.push_back({&population[i], false, i});
    for (std::size_t i = 0; i < scored.size(); ++i)
      merged.push_back({&scored[i], true, i});
    std::sort(merged.begin(), merged.end(), [](const Ranked& a, const Ranked& b) {
      if (a.ind->fitness != b.ind->fitness) return a.ind->fitness > b.ind->fitness;
      if (a.is_offspring != b.is_offspring) return a.is_offspring;
      return a.order < b.order;
    });

    std::vector<ScoredIndividual> survivors;
    survivors.reserve(static_cast<std::size_t>(config.n_pop));
    for (int i = 0; i < config.n_pop && i < static_cast<int>(merged.size()); ++i)
      survivors.push_back(*merged[static_cast<std::size_t>(i)].ind);
    population = std::move(survivors);

    best_so_far = std::max(best_so_far, population.front().fitness);
    result.trend.push_back({dispatcher.done, best_so_far});
  }

  const ScoredIndividual* best = &population.front();
  for (const auto& ind : population)
    if (ind.fitness > best->fitness) best = &ind;
  result.best = *best;
  result.final_population = std::move(population);
  return result;
}

MEResult run_map_elites(const MEConfig& config, const EvalFn& evaluate,
                        std::uint64_t run_seed, bool log_evals) {
  config.validate();
  Rng driver(mix_seed(run_seed, 0));
  EvalDispatcher dispatcher{evaluate, mix_seed(run_seed, 1), config.n_threads};

  MEResult result{Archive(config), {}, {}, {}};
  Archive& archive = result.archive;

  auto insert_all = [&](const std::vector<ScoredIndividual>& scored) {
    for (const auto& ind : scored) archive.insert(ind);
    if (log_evals)
      result.eval_log.insert(result.eval_log.end(), scored.begin(), scored.end());
  };
  auto checkpoint = [&] {
    // an empty archive (possible only while every individual decoded invalid
    // or fell outside the grid) reports -inf so the series stays numeric
    result.trend.push_back(
        {dispatcher.done,
         archive.best_fitness(-std::numeric_limits<double>::infinity())});
    result.coverage_trend.push_back({dispatcher.done, archive.coverage()});
  };

  const long long first = std::min<long long>(config.init_pop, config.total_pop);
  std::vector<Genotype> seeds;
  seeds.reserve(static_cast<std::size_t>(first));
  for (long long i = 0; i < first; ++i)
    seeds.push_back(random_genotype(static_cast<std::size_t>(config.genotype_size),
                                    config.max_value, driver));
  insert_all(dispatcher.run(seeds));
  checkpoint();

  while (dispatcher.done < config.total_pop) {
    const long long remaining = config.total_pop - dispatcher.done;
    const int n_new =
        static_cast<int>(std::min<long long>(config.batch_n, remaining));

    const auto occupied = archive.cells();
    std::vector<Genotype> batch;
    batch.reserve(static_cast<std::size_t>(n_new));
    if (occupied.empty()) {
      // nothing survived initialization; fall back to fresh random genotypes
      for (int i = 0; i < n_new; ++i)
        batch.push_back(random_genotype(
            static_cast<std::size_t>(config.genotype_size), config.max_value, driver));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, occupied.size() - 1);
      for (int i = 0; i < n_new; ++i) {
        const Archive::Cell* parent = occupied[pick(driver)].second;
        const Archive::Cell* rival = occupied[pick(driver)].second;
        if (rival->fitness > parent->fitness) parent = rival;
        batch.push_back(
            mutate(parent->genotype, config.per_gene_mutation_rate, driver));
      }
    }
    insert_all(dispatcher.run(batch));
    checkpoint();
  }
  return result;
}

}  // namespace qdt
