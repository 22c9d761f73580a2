#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "qdt/evo.hpp"

using namespace qdt;

namespace {

// Deterministic stand-in evaluator: scores depend on the genes alone, so
// driver mechanics can be tested without episode rollouts.
ScoredIndividual stub_score(const Genotype& g, std::uint64_t eval_seed) {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (const auto gene : g.genes) h = splitmix64(h ^ gene);
  ScoredIndividual out;
  out.genotype = g;
  out.valid = h % 20 != 0;  // every 20th genome "fails to decode"
  out.fitness = out.valid ? static_cast<double>(h % 5000) / 10.0 : 0.0;
  out.entropy = static_cast<double>(splitmix64(h) % 1001) / 1000.0;
  out.depth = 1 + static_cast<int>(splitmix64(h ^ 7) % 10);
  out.eval_seed = eval_seed;
  return out;
}

MEConfig small_me() {
  MEConfig c;
  c.behavioral_min = 0.0;
  c.behavioral_max = 1.0;
  c.total_pop = 500;
  c.init_pop = 100;
  c.batch_n = 20;
  c.genotype_size = 20;
  return c;
}

GEConfig small_ge() {
  GEConfig c;
  c.n_pop = 20;
  c.total_pop = 200;
  c.genotype_size = 20;
  c.per_gene_mutation_rate = 0.05;
  return c;
}

}  // namespace

TEST_SUITE("evo") {

TEST_CASE("mutate redraws genes at the configured rate") {
  Rng rng(5);
  const Genotype parent = random_genotype(100, 40000, rng);

  // binomial oracle: 1e4 trials at rate 1/100, a replacement only counts as a
  // change when the fresh gene differs from the old one
  const int trials = 10000;
  long long changed = 0;
  for (int t = 0; t < trials; ++t) {
    const Genotype child = mutate(parent, 0.01, rng);
    CHECK(child.genes.size() == parent.genes.size());
    for (std::size_t i = 0; i < child.genes.size(); ++i) {
      CHECK(child.genes[i] <= 40000);
      if (child.genes[i] != parent.genes[i]) ++changed;
    }
  }
  const double n = static_cast<double>(trials) * 100.0;
  const double p = 0.01 * (40000.0 / 40001.0);
  const double sigma = std::sqrt(n * p * (1.0 - p));
  CHECK(std::abs(static_cast<double>(changed) - n * p) <= 3.0 * sigma);
}

TEST_CASE("mutation rate 1 redraws everything") {
  Rng rng(6);
  const Genotype parent = random_genotype(100, 40000, rng);
  const Genotype child = mutate(parent, 1.0, rng);
  int unchanged = 0;
  for (std::size_t i = 0; i < child.genes.size(); ++i)
    if (child.genes[i] == parent.genes[i]) ++unchanged;
  CHECK(unchanged <= 5);  // equal only by the 1/40001 coincidence
}

TEST_CASE("crossover boundaries and exchange property") {
  Rng rng(7);
  const Genotype p1 = random_genotype(50, 40000, rng);
  const Genotype p2 = random_genotype(50, 40000, rng);

  const auto [swap1, swap2] = crossover_at(p1, p2, 0);
  CHECK(swap1.genes == p2.genes);
  CHECK(swap2.genes == p1.genes);

  const auto [same1, same2] = crossover_at(p1, p2, 50);
  CHECK(same1.genes == p1.genes);
  CHECK(same2.genes == p2.genes);

  for (int t = 0; t < 50; ++t) {
    const auto [c1, c2] = crossover(p1, p2, rng);
    for (std::size_t i = 0; i < 50; ++i) {
      const std::multiset<std::uint32_t> parents{p1.genes[i], p2.genes[i]};
      const std::multiset<std::uint32_t> children{c1.genes[i], c2.genes[i]};
      CHECK(parents == children);
    }
  }
}

TEST_CASE("tournament selection") {
  Rng rng(8);
  std::vector<ScoredIndividual> pop(3);
  pop[0].fitness = 5.0;
  pop[1].fitness = 50.0;
  pop[2].fitness = 0.5;

  // with k far above the population size a miss of the best is implausible
  CHECK(tournament_select(pop, 200, rng).fitness == 50.0);

  // k=1 is uniform
  std::map<double, int> hits;
  for (int i = 0; i < 9000; ++i) ++hits[tournament_select(pop, 1, rng).fitness];
  for (const auto& [f, n] : hits) CHECK(std::abs(n - 3000) < 3 * 55);

  // k=2 over {1,2}: P(select 2) = 3/4
  std::vector<ScoredIndividual> two(2);
  two[0].fitness = 1.0;
  two[1].fitness = 2.0;
  int picked_best = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    if (tournament_select(two, 2, rng).fitness == 2.0) ++picked_best;
  const double sigma = std::sqrt(draws * 0.75 * 0.25);
  CHECK(std::abs(picked_best - draws * 0.75) <= 3.0 * sigma);
}

TEST_CASE("descriptor binning") {
  MEConfig cp;  // cart pole bounds [0.8, 1.0] x [1, 10]
  const auto mid = descriptor_coords(0.85, 3.0, cp);
  REQUIRE(mid.has_value());
  CHECK(mid->entropy_bin == 2);
  CHECK(mid->depth_bin == 2);

  for (int d = 1; d <= 10; ++d) {
    const auto c = descriptor_coords(0.9, static_cast<double>(d), cp);
    REQUIRE(c.has_value());
    CHECK(c->depth_bin == d - 1);
  }

  CHECK(descriptor_coords(1.0, 10.0, cp)->entropy_bin == 9);  // top edges close
  CHECK(descriptor_coords(0.8, 1.0, cp)->entropy_bin == 0);
  CHECK(!descriptor_coords(0.79, 5.0, cp).has_value());  // below behavioral_min
  CHECK(!descriptor_coords(0.9, 0.0, cp).has_value());   // leaf-only tree
  CHECK(!descriptor_coords(0.9, 11.0, cp).has_value());

  MEConfig clamped = cp;
  clamped.oob = OobPolicy::clamp;
  CHECK(descriptor_coords(0.5, 0.0, clamped)->entropy_bin == 0);
  CHECK(descriptor_coords(0.5, 0.0, clamped)->depth_bin == 0);
  CHECK(descriptor_coords(1.0, 12.0, clamped)->depth_bin == 9);
}

TEST_CASE("archive insertion rules") {
  MEConfig cfg = small_me();
  Archive archive(cfg);

  ScoredIndividual ind;
  ind.valid = true;
  ind.fitness = 400.0;
  ind.entropy = 0.55;
  ind.depth = 3;
  CHECK(archive.insert(ind));
  CHECK(archive.occupied() == 1);

  ind.fitness = 400.0;  // tie: incumbent stays
  CHECK(!archive.insert(ind));
  ind.fitness = 475.0;
  CHECK(archive.insert(ind));
  const auto coords = descriptor_coords(0.55, 3.0, cfg);
  CHECK(archive.at(coords->entropy_bin, coords->depth_bin)->fitness == 475.0);

  ind.valid = false;
  ind.fitness = 1e9;
  CHECK(!archive.insert(ind));

  ind.valid = true;
  ind.entropy = 1.5;  // out of bounds
  CHECK(!archive.insert(ind));
}

TEST_CASE("archive capacity and per-cell monotonicity under a random stream") {
  MEConfig cfg = small_me();
  Archive archive(cfg);
  Rng rng(100);
  std::uniform_real_distribution<double> e(0.0, 1.0);
  std::uniform_int_distribution<int> d(0, 12);
  std::uniform_real_distribution<double> f(-200.0, 500.0);
  std::map<std::pair<int, int>, double> shadow;
  for (int i = 0; i < 5000; ++i) {
    ScoredIndividual ind;
    ind.valid = true;
    ind.entropy = e(rng);
    ind.depth = d(rng);
    ind.fitness = f(rng);
    archive.insert(ind);
    CHECK(archive.occupied() <= 100);
    const auto c = descriptor_coords(ind.entropy, ind.depth, cfg);
    if (!c) continue;
    const auto key = std::make_pair(c->entropy_bin, c->depth_bin);
    const auto it = shadow.find(key);
    if (it == shadow.end() || ind.fitness > it->second)
      shadow[key] = ind.fitness;
  }
  for (const auto& [coords, cell] : archive.cells()) {
    const auto it = shadow.find({coords.entropy_bin, coords.depth_bin});
    REQUIRE(it != shadow.end());
    CHECK(cell->fitness == it->second);
  }
}

TEST_CASE("GE spends exactly its budget and keeps the population size") {
  GEConfig cfg = small_ge();
  long long evals = 0;
  const EvalFn fn = [&](const Genotype& g, std::uint64_t seed) {
    ++evals;
    return stub_score(g, seed);
  };
  const GEResult res = run_ge(cfg, fn, 123, true);
  CHECK(evals == cfg.total_pop);
  CHECK(res.eval_log.size() == static_cast<std::size_t>(cfg.total_pop));
  CHECK(res.final_population.size() == static_cast<std::size_t>(cfg.n_pop));
  CHECK(res.trend.size() == static_cast<std::size_t>(cfg.total_pop / cfg.n_pop));
  for (std::size_t i = 1; i < res.trend.size(); ++i)
    CHECK(res.trend[i].best_fitness >= res.trend[i - 1].best_fitness);
  CHECK(res.trend.back().best_fitness == res.best.fitness);
}

TEST_CASE("GE with total_pop == n_pop returns the best of the random start") {
  GEConfig cfg = small_ge();
  cfg.total_pop = cfg.n_pop;
  const GEResult res = run_ge(cfg, stub_score, 5);
  CHECK(res.trend.size() == 1);
  double best = res.final_population.front().fitness;
  for (const auto& ind : res.final_population) best = std::max(best, ind.fitness);
  CHECK(res.best.fitness == best);
}

TEST_CASE("GE is reproducible and thread-count independent") {
  GEConfig cfg = small_ge();
  const GEResult a = run_ge(cfg, stub_score, 99);
  const GEResult b = run_ge(cfg, stub_score, 99);
  cfg.n_threads = 4;
  const GEResult c = run_ge(cfg, stub_score, 99);
  REQUIRE(a.final_population.size() == b.final_population.size());
  REQUIRE(a.final_population.size() == c.final_population.size());
  for (std::size_t i = 0; i < a.final_population.size(); ++i) {
    CHECK(a.final_population[i].genotype.genes == b.final_population[i].genotype.genes);
    CHECK(a.final_population[i].fitness == b.final_population[i].fitness);
    CHECK(a.final_population[i].genotype.genes == c.final_population[i].genotype.genes);
    CHECK(a.final_population[i].fitness == c.final_population[i].fitness);
    CHECK(a.final_population[i].eval_seed == c.final_population[i].eval_seed);
  }
  const GEResult d = run_ge(cfg, stub_score, 100);
  CHECK(a.best.genotype.genes != d.best.genotype.genes);
}

TEST_CASE("ME spends exactly its budget and respects the grid") {
  MEConfig cfg = small_me();
  long long evals = 0;
  const EvalFn fn = [&](const Genotype& g, std::uint64_t seed) {
    ++evals;
    return stub_score(g, seed);
  };
  const MEResult res = run_map_elites(cfg, fn, 2024, true);
  CHECK(evals == cfg.total_pop);
  CHECK(res.eval_log.size() == static_cast<std::size_t>(cfg.total_pop));
  CHECK(res.archive.occupied() <= res.archive.capacity());
  const auto batches = (cfg.total_pop - cfg.init_pop) / cfg.batch_n;
  CHECK(res.trend.size() == static_cast<std::size_t>(batches + 1));
  CHECK(res.coverage_trend.size() == res.trend.size());
  for (std::size_t i = 1; i < res.trend.size(); ++i) {
    CHECK(res.trend[i].best_fitness >= res.trend[i - 1].best_fitness);
    CHECK(res.coverage_trend[i].coverage >= res.coverage_trend[i - 1].coverage);
  }
}

TEST_CASE("ME is reproducible and thread-count independent") {
  MEConfig cfg = small_me();
  const MEResult a = run_map_elites(cfg, stub_score, 31);
  cfg.n_threads = 4;
  const MEResult b = run_map_elites(cfg, stub_score, 31);
  const auto cells_a = a.archive.cells();
  const auto cells_b = b.archive.cells();
  REQUIRE(cells_a.size() == cells_b.size());
  for (std::size_t i = 0; i < cells_a.size(); ++i) {
    CHECK(cells_a[i].first.entropy_bin == cells_b[i].first.entropy_bin);
    CHECK(cells_a[i].first.depth_bin == cells_b[i].first.depth_bin);
    CHECK(cells_a[i].second->fitness == cells_b[i].second->fitness);
    CHECK(cells_a[i].second->genotype.genes == cells_b[i].second->genotype.genes);
    CHECK(cells_a[i].second->eval_seed == cells_b[i].second->eval_seed);
  }
}

TEST_CASE("config validation rejects broken setups") {
  GEConfig ge;
  ge.n_pop = 7;  // odd
  CHECK_THROWS(ge.validate());
  ge.n_pop = 200;
  ge.total_pop = 100;
  CHECK_THROWS(ge.validate());

  MEConfig me;
  me.behavioral_min = 1.0;
  me.behavioral_max = 0.0;
  CHECK_THROWS(me.validate());
  me = MEConfig{};
  me.batch_n = me.init_pop + 1;
  CHECK_THROWS(me.validate());
  me = MEConfig{};
  me.total_pop = me.init_pop - 1;
  CHECK_THROWS(me.validate());
}

}  // TEST_SUITE
