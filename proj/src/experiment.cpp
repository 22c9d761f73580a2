#include "qdt/experiment.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace qdt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto end = line.find(sep, pos);
    if (end == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
}

long long parse_int(const std::string& v) {
  std::size_t used = 0;
  const long long out = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument("bad integer: " + v);
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::size_t used = 0;
  const unsigned long long out = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("bad integer: " + v);
  return out;
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double out = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("bad number: " + v);
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("bad boolean: " + v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> data_lines(const std::string& path,
                                    const std::string& expected_header) {
  auto lines = split(read_file(path), '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty() || trim(lines.front()) != expected_header)
    throw std::runtime_error(path + ": expected header '" + expected_header + "'");
  lines.erase(lines.begin());
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Algo parse_algo(const std::string& name) {
  if (name == "ge") return Algo::ge;
  if (name == "me") return Algo::me;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algo_name(Algo algo) { return algo == Algo::ge ? "ge" : "me"; }

ExperimentConfig ExperimentConfig::defaults(Algo algo, EnvId env) {
  ExperimentConfig c;
  c.algorithm = algo;
  c.environment = env;
  c.total_pop = env == EnvId::cartpole ? 10000 : 200000;
  c.behavioral_min = env == EnvId::cartpole ? 0.8 : 0.0;
  c.behavioral_max = 1.0;
  c.p_cx = algo == Algo::ge ? 0.1 : 0.0;
  c.rl.epsilon = env == EnvId::cartpole ? 0.05 : 0.01;
  return c;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
  if (key == "algorithm") algorithm = parse_algo(value);
  else if (key == "environment") environment = parse_env_id(value);
  else if (key == "n_runs") n_runs = static_cast<int>(parse_int(value));
  else if (key == "master_seed") master_seed = parse_u64(value);
  else if (key == "n_threads") n_threads = static_cast<int>(parse_int(value));
  else if (key == "log_all_evals") log_all_evals = parse_bool(value);
  else if (key == "genotype_size") genotype_size = static_cast<int>(parse_int(value));
  else if (key == "max_value") max_value = static_cast<std::uint32_t>(parse_u64(value));
  else if (key == "per_gene_mutation_rate") per_gene_mutation_rate = parse_double(value);
  else if (key == "n_pop") n_pop = static_cast<int>(parse_int(value));
  else if (key == "total_pop") total_pop = parse_int(value);
  else if (key == "tournament_k") tournament_k = static_cast<int>(parse_int(value));
  else if (key == "p_cx") p_cx = parse_double(value);
  else if (key == "p_mu") p_mu = parse_double(value);
  else if (key == "bins_per_dim") bins_per_dim = static_cast<int>(parse_int(value));
  else if (key == "behavioral_min") behavioral_min = parse_double(value);
  else if (key == "behavioral_max") behavioral_max = parse_double(value);
  else if (key == "structural_min") structural_min = parse_double(value);
  else if (key == "structural_max") structural_max = parse_double(value);
  else if (key == "batch_n") batch_n = static_cast<int>(parse_int(value));
  else if (key == "init_pop") init_pop = static_cast<int>(parse_int(value));
  else if (key == "oob") {
    if (value == "discard") oob = OobPolicy::discard;
    else if (value == "clamp") oob = OobPolicy::clamp;
    else throw std::invalid_argument("oob must be 'discard' or 'clamp'");
  }
  else if (key == "epsilon") rl.epsilon = parse_double(value);
  else if (key == "learning_rate") rl.learning_rate = parse_double(value);
  else if (key == "discount") rl.discount = parse_double(value);
  else if (key == "q_init_low") rl.q_init_low = parse_double(value);
  else if (key == "q_init_high") rl.q_init_high = parse_double(value);
  else if (key == "n_episodes") n_episodes = static_cast<int>(parse_int(value));
  else throw std::invalid_argument("unknown config key: " + key);
}

void ExperimentConfig::validate() const {
  if (n_runs < 1) throw std::invalid_argument("n_runs must be positive");
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be positive");
  if (rl.epsilon < 0.0 || rl.epsilon > 1.0)
    throw std::invalid_argument("epsilon must lie in [0,1]");
  if (rl.learning_rate <= 0.0)
    throw std::invalid_argument("learning_rate must be positive");
  if (rl.discount < 0.0 || rl.discount > 1.0)
    throw std::invalid_argument("discount must lie in [0,1]");
  if (rl.q_init_low > rl.q_init_high)
    throw std::invalid_argument("q_init bounds must be ordered");
  const auto grammar = make_grammar();
  if (static_cast<std::size_t>(max_value) + 1 <= grammar.max_choices())
    throw std::invalid_argument(
        "max_value too small to reach every grammar alternative");
  if (algorithm == Algo::ge) ge_config().validate();
  else me_config().validate();
}

GEConfig ExperimentConfig::ge_config() const {
  GEConfig c;
  c.n_pop = n_pop;
  c.total_pop = total_pop;
  c.tournament_k = tournament_k;
  c.p_cx = p_cx;
  c.p_mu = p_mu;
  c.per_gene_mutation_rate = per_gene_mutation_rate;
  c.genotype_size = genotype_size;
  c.max_value = max_value;
  c.n_threads = n_threads;
  return c;
}

MEConfig ExperimentConfig::me_config() const {
  MEConfig c;
  c.bins_per_dim = bins_per_dim;
  c.behavioral_min = behavioral_min;
  c.behavioral_max = behavioral_max;
  c.structural_min = structural_min;
  c.structural_max = structural_max;
  c.total_pop = total_pop;
  c.batch_n = batch_n;
  c.init_pop = init_pop;
  c.per_gene_mutation_rate = per_gene_mutation_rate;
  c.genotype_size = genotype_size;
  c.max_value = max_value;
  c.oob = oob;
  c.n_threads = n_threads;
  return c;
}

ObliqueGrammar ExperimentConfig::make_grammar() const {
  const auto env = make_environment(environment);
  return ObliqueGrammar::standard(env->n_inputs(), env->n_actions());
}

Evaluator ExperimentConfig::make_evaluator() const {
  return Evaluator(make_grammar(), environment, rl, n_episodes);
}

std::string ExperimentConfig::to_key_values() const {
  std::string out;
  auto put = [&](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  put("algorithm", algo_name(algorithm));
  put("environment", env_name(environment));
  put("n_runs", std::to_string(n_runs));
  put("master_seed", std::to_string(master_seed));
  put("n_threads", std::to_string(n_threads));
  put("log_all_evals", log_all_evals ? "true" : "false");
  put("genotype_size", std::to_string(genotype_size));
  put("max_value", std::to_string(max_value));
  put("per_gene_mutation_rate", format_double(per_gene_mutation_rate));
  put("n_pop", std::to_string(n_pop));
  put("total_pop", std::to_string(total_pop));
  put("tournament_k", std::to_string(tournament_k));
  put("p_cx", format_double(p_cx));
  put("p_mu", format_double(p_mu));
  put("bins_per_dim", std::to_string(bins_per_dim));
  put("behavioral_min", format_double(behavioral_min));
  put("behavioral_max", format_double(behavioral_max));
  put("structural_min", format_double(structural_min));
  put("structural_max", format_double(structural_max));
  put("batch_n", std::to_string(batch_n));
  put("init_pop", std::to_string(init_pop));
  put("oob", oob == OobPolicy::discard ? "discard" : "clamp");
  put("epsilon", format_double(rl.epsilon));
  put("learning_rate", format_double(rl.learning_rate));
  put("discount", format_double(rl.discount));
  put("q_init_low", format_double(rl.q_init_low));
  put("q_init_high", format_double(rl.q_init_high));
  put("n_episodes", std::to_string(n_episodes));
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_key_value_file(
    const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto lines = split(read_file(path), '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(i + 1) +
                                  ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

ExperimentConfig read_config_snapshot(const std::string& path) {
  const auto kv = parse_key_value_file(path);
  std::string algo, env;
  for (const auto& [k, v] : kv) {
    if (k == "algorithm") algo = v;
    if (k == "environment") env = v;
  }
  if (algo.empty() || env.empty())
    throw std::runtime_error(path + ": missing algorithm/environment");
  ExperimentConfig config =
      ExperimentConfig::defaults(parse_algo(algo), parse_env_id(env));
  for (const auto& [k, v] : kv) config.apply(k, v);
  config.validate();
  return config;
}

// ---- run outputs ----

namespace {

constexpr const char* kTrendHeader = "evaluations,best_fitness";
constexpr const char* kCoverageHeader = "evaluations,coverage";
constexpr const char* kArchiveHeader =
    "entropy_bin,depth_bin,fitness,entropy,depth,eval_seed,genotype";
constexpr const char* kPopulationHeader =
    "fitness,entropy,depth,valid,eval_seed,genotype";
constexpr const char* kEvalsHeader =
    "eval_index,fitness,entropy,depth,valid,eval_seed,genotype";

std::string trend_csv(std::span<const TrendPoint> trend) {
  std::string out = std::string(kTrendHeader) + "\n";
  for (const auto& p : trend) {
    out += std::to_string(p.evaluations);
    out += ',';
    out += format_double(p.best_fitness);
    out += '\n';
  }
  return out;
}

std::string coverage_csv(std::span<const CoveragePoint> trend) {
  std::string out = std::string(kCoverageHeader) + "\n";
  for (const auto& p : trend) {
    out += std::to_string(p.evaluations);
    out += ',';
    out += format_double(p.coverage);
    out += '\n';
  }
  return out;
}

std::string archive_csv(const Archive& archive) {
  std::string out = std::string(kArchiveHeader) + "\n";
  for (const auto& [coords, cell] : archive.cells()) {
    out += std::to_string(coords.entropy_bin);
    out += ',';
    out += std::to_string(coords.depth_bin);
    out += ',';
    out += format_double(cell->fitness);
    out += ',';
    out += format_double(cell->entropy);
    out += ',';
    out += std::to_string(cell->depth);
    out += ',';
    out += std::to_string(cell->eval_seed);
    out += ',';
    out += cell->genotype.to_text();
    out += '\n';
  }
  return out;
}

void append_individual(std::string& out, const ScoredIndividual& ind) {
  out += format_double(ind.fitness);
  out += ',';
  if (ind.valid) {
    out += format_double(ind.entropy);
    out += ',';
    out += std::to_string(ind.depth);
  } else {
    out += ',';  // invalid individuals carry no descriptor
  }
  out += ',';
  out += ind.valid ? '1' : '0';
  out += ',';
  out += std::to_string(ind.eval_seed);
  out += ',';
  out += ind.genotype.to_text();
  out += '\n';
}

std::string population_csv(std::span<const ScoredIndividual> population) {
  std::string out = std::string(kPopulationHeader) + "\n";
  for (const auto& ind : population) append_individual(out, ind);
  return out;
}

std::string evals_csv(std::span<const ScoredIndividual> log) {
  std::string out = std::string(kEvalsHeader) + "\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    append_individual(out, log[i]);
  }
  return out;
}

}  // namespace

std::vector<TrendRow> read_trend_csv(const std::string& path) {
  std::vector<TrendRow> out;
  for (const auto& line : data_lines(path, kTrendHeader)) {
    const auto f = split(trim(line), ',');
    if (f.size() != 2) throw std::runtime_error(path + ": bad trend row");
    out.push_back({parse_int(f[0]), parse_double(f[1])});
  }
  return out;
}

std::vector<ArchiveRow> read_archive_csv(const std::string& path) {
  std::vector<ArchiveRow> out;
  for (const auto& line : data_lines(path, kArchiveHeader)) {
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw std::runtime_error(path + ": bad archive row");
    ArchiveRow row;
    row.entropy_bin = static_cast<int>(parse_int(f[0]));
    row.depth_bin = static_cast<int>(parse_int(f[1]));
    row.fitness = parse_double(f[2]);
    row.entropy = parse_double(f[3]);
    row.depth = static_cast<int>(parse_int(f[4]));
    row.eval_seed = parse_u64(f[5]);
    row.genotype = f[6];
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<IndividualRow> read_individuals_csv(const std::string& path,
                                                bool has_index) {
  std::vector<IndividualRow> out;
  const char* header = has_index ? kEvalsHeader : kPopulationHeader;
  for (const auto& line : data_lines(path, header)) {
    auto f = split(trim(line), ',');
    if (f.size() != (has_index ? 7u : 6u))
      throw std::runtime_error(path + ": bad individual row");
    IndividualRow row;
    std::size_t i = 0;
    if (has_index) row.index = parse_int(f[i++]);
    row.fitness = parse_double(f[i++]);
    const std::string entropy_field = f[i++];
    const std::string depth_field = f[i++];
    row.valid = parse_bool(f[i++]);
    row.eval_seed = parse_u64(f[i++]);
    row.genotype = f[i++];
    if (row.valid) {
      row.entropy = parse_double(entropy_field);
      row.depth = static_cast<int>(parse_int(depth_field));
    } else if (!entropy_field.empty() || !depth_field.empty()) {
      throw std::runtime_error(path + ": invalid row carries a descriptor");
    }
    out.push_back(std::move(row));
  }
  return out;
}

void run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  // create every run directory up front so a non-writable target fails
  // before any evaluation
  std::vector<fs::path> run_dirs;
  for (int r = 0; r < config.n_runs; ++r) {
    fs::path dir = fs::path(out_dir) / ("run_" + std::to_string(r));
    fs::create_directories(dir);
    run_dirs.push_back(dir);
  }

  const Evaluator evaluator = config.make_evaluator();
  const EvalFn fn = [&evaluator](const Genotype& g, std::uint64_t seed) {
    return evaluator.score(g, seed);
  };

  for (int r = 0; r < config.n_runs; ++r) {
    const std::uint64_t run_seed = config.master_seed + static_cast<std::uint64_t>(r);
    const auto& dir = run_dirs[static_cast<std::size_t>(r)];
    const auto t0 = std::chrono::steady_clock::now();

    ExperimentConfig snapshot = config;
    snapshot.master_seed = run_seed;  // replaying the snapshot reproduces this
    snapshot.n_runs = 1;              // run as its run_0

    if (config.algorithm == Algo::ge) {
      const GEResult res =
          run_ge(config.ge_config(), fn, run_seed, config.log_all_evals);
      write_file((dir / "trend.csv").string(), trend_csv(res.trend));
      write_file((dir / "population.csv").string(),
                 population_csv(res.final_population));
      if (config.log_all_evals)
        write_file((dir / "evals.csv").string(), evals_csv(res.eval_log));
    } else {
      const MEResult res =
          run_map_elites(config.me_config(), fn, run_seed, config.log_all_evals);
      write_file((dir / "trend.csv").string(), trend_csv(res.trend));
      write_file((dir / "coverage.csv").string(),
                 coverage_csv(res.coverage_trend));
      write_file((dir / "archive.csv").string(), archive_csv(res.archive));
      if (config.log_all_evals)
        write_file((dir / "evals.csv").string(), evals_csv(res.eval_log));
    }
    write_file((dir / "config.snapshot").string(), snapshot.to_key_values());

    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0);
    write_file((dir / "run_meta.txt").string(),
               "run_index=" + std::to_string(r) + "\nrun_seed=" +
                   std::to_string(run_seed) + "\nelapsed_seconds=" +
                   format_double(elapsed.count()) + "\n");
  }
}

void project_ge_map(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const ExperimentConfig config =
      read_config_snapshot((dir / "config.snapshot").string());
  if (config.algorithm != Algo::ge)
    throw std::runtime_error(run_dir + ": not a GE run");
  const fs::path evals = dir / "evals.csv";
  if (!fs::exists(evals))
    throw std::runtime_error(evals.string() +
                             " not found (rerun with --log-all-evals)");

  Archive archive(config.me_config());
  for (const auto& row : read_individuals_csv(evals.string(), true)) {
    if (!row.valid) continue;
    ScoredIndividual ind;
    ind.genotype = Genotype::from_text(row.genotype, config.max_value);
    ind.fitness = row.fitness;
    ind.entropy = row.entropy;
    ind.depth = row.depth;
    ind.valid = true;
    ind.eval_seed = row.eval_seed;
    archive.insert(ind);
  }
  write_file((dir / "ge_map.csv").string(), archive_csv(archive));
}

namespace {

bool is_run_dir(const fs::path& dir) {
  return fs::exists(dir / "config.snapshot");
}

std::vector<fs::path> expand_run_dirs(const std::vector<std::string>& dirs) {
  std::vector<fs::path> out;
  for (const auto& d : dirs) {
    const fs::path p(d);
    if (is_run_dir(p)) {
      out.push_back(p);
      continue;
    }
    std::vector<fs::path> children;
    if (fs::is_directory(p))
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_directory() && is_run_dir(entry.path()))
          children.push_back(entry.path());
    if (children.empty())
      throw std::runtime_error(d + ": not a run directory (no config.snapshot)");
    std::sort(children.begin(), children.end());
    out.insert(out.end(), children.begin(), children.end());
  }
  return out;
}

std::string config_identity(const ExperimentConfig& config) {
  // everything except the seed must match across aggregated runs
  ExperimentConfig c = config;
  c.master_seed = 0;
  return c.to_key_values();
}

}  // namespace

void aggregate_runs(const std::vector<std::string>& dirs,
                    const std::string& out_dir) {
  const auto run_dirs = expand_run_dirs(dirs);
  if (run_dirs.empty()) throw std::runtime_error("no run directories given");

  std::vector<ExperimentConfig> configs;
  for (const auto& dir : run_dirs)
    configs.push_back(read_config_snapshot((dir / "config.snapshot").string()));
  for (std::size_t i = 1; i < configs.size(); ++i)
    if (config_identity(configs[i]) != config_identity(configs[0]))
      throw std::runtime_error(run_dirs[i].string() +
                               ": config does not match " +
                               run_dirs[0].string());

  const int m = configs[0].bins_per_dim;
  struct BinStats {
    std::vector<double> fitnesses;
  };
  std::vector<BinStats> bins(static_cast<std::size_t>(m) *
                             static_cast<std::size_t>(m));

  for (const auto& dir : run_dirs) {
    fs::path map = dir / "archive.csv";
    if (!fs::exists(map)) map = dir / "ge_map.csv";
    if (!fs::exists(map))
      throw std::runtime_error(dir.string() +
                               ": no archive.csv or ge_map.csv (for GE runs, "
                               "run project-ge-map first)");
    for (const auto& row : read_archive_csv(map.string())) {
      if (row.entropy_bin < 0 || row.entropy_bin >= m || row.depth_bin < 0 ||
          row.depth_bin >= m)
        throw std::runtime_error(map.string() + ": bin outside the grid");
      bins[static_cast<std::size_t>(row.entropy_bin) * static_cast<std::size_t>(m) +
           static_cast<std::size_t>(row.depth_bin)]
          .fitnesses.push_back(row.fitness);
    }
  }

  fs::create_directories(out_dir);
  const std::string map_header = "entropy_bin,depth_bin,fitness,occupied_runs";
  std::string avg = map_header + "\n";
  std::string max = map_header + "\n";
  for (int e = 0; e < m; ++e) {
    for (int d = 0; d < m; ++d) {
      const auto& cell = bins[static_cast<std::size_t>(e) * static_cast<std::size_t>(m) +
                              static_cast<std::size_t>(d)];
      const std::string prefix =
          std::to_string(e) + "," + std::to_string(d) + ",";
      const auto n = cell.fitnesses.size();
      if (n == 0) {
        // occupied in no run: the bin stays empty in both maps
        avg += prefix + ",0\n";
        max += prefix + ",0\n";
        continue;
      }
      double sum = 0.0, best = cell.fitnesses[0];
      for (const double f : cell.fitnesses) {
        sum += f;
        best = std::max(best, f);
      }
      avg += prefix + format_double(sum / static_cast<double>(n)) + "," +
             std::to_string(n) + "\n";
      max += prefix + format_double(best) + "," + std::to_string(n) + "\n";
    }
  }
  write_file((fs::path(out_dir) / "average_map.csv").string(), avg);
  write_file((fs::path(out_dir) / "max_map.csv").string(), max);

  // trend mean +- std per checkpoint; all runs share the checkpoint grid
  std::vector<std::vector<TrendRow>> trends;
  for (const auto& dir : run_dirs)
    trends.push_back(read_trend_csv((dir / "trend.csv").string()));
  for (std::size_t i = 1; i < trends.size(); ++i) {
    if (trends[i].size() != trends[0].size())
      throw std::runtime_error("trend checkpoint counts differ across runs");
    for (std::size_t j = 0; j < trends[i].size(); ++j)
      if (trends[i][j].evaluations != trends[0][j].evaluations)
        throw std::runtime_error("trend checkpoints differ across runs");
  }
  std::string summary = "evaluations,mean_best_fitness,std_best_fitness\n";
  const auto n_runs = static_cast<double>(trends.size());
  for (std::size_t j = 0; j < trends[0].size(); ++j) {
    double sum = 0.0;
    for (const auto& t : trends) sum += t[j].best_fitness;
    const double mean = sum / n_runs;
    double var = 0.0;
    for (const auto& t : trends) {
      const double d = t[j].best_fitness - mean;
      var += d * d;
    }
    const double stdev = trends.size() > 1 ? std::sqrt(var / (n_runs - 1.0)) : 0.0;
    summary += std::to_string(trends[0][j].evaluations) + "," +
               format_double(mean) + "," + format_double(stdev) + "\n";
  }
  write_file((fs::path(out_dir) / "trend_summary.csv").string(), summary);
}

std::string export_tree(const std::string& run_dir, const ExportTarget& target) {
  const fs::path dir(run_dir);
  const ExperimentConfig config =
      read_config_snapshot((dir / "config.snapshot").string());

  Genotype genotype;
  double stored_fitness = 0.0;
  std::uint64_t eval_seed = 0;
  bool found = false;

  fs::path map = dir / "archive.csv";
  if (!fs::exists(map)) map = dir / "ge_map.csv";

  if (target.best && fs::exists(dir / "population.csv")) {
    // GE runs: the best elite is the best of the final population
    const IndividualRow* best = nullptr;
    const auto rows = read_individuals_csv((dir / "population.csv").string(), false);
    for (const auto& row : rows)
      if (row.valid && (!best || row.fitness > best->fitness)) best = &row;
    if (!best) throw std::runtime_error("population holds no valid individual");
    genotype = Genotype::from_text(best->genotype, config.max_value);
    stored_fitness = best->fitness;
    eval_seed = best->eval_seed;
    found = true;
  } else if (fs::exists(map)) {
    const auto rows = read_archive_csv(map.string());
    if (target.best) {
      const ArchiveRow* best = nullptr;
      for (const auto& row : rows)
        if (!best || row.fitness > best->fitness) best = &row;
      if (!best) throw std::runtime_error(map.string() + ": archive is empty");
      genotype = Genotype::from_text(best->genotype, config.max_value);
      stored_fitness = best->fitness;
      eval_seed = best->eval_seed;
      found = true;
    } else {
      for (const auto& row : rows) {
        if (row.entropy_bin == target.entropy_bin &&
            row.depth_bin == target.depth_bin) {
          genotype = Genotype::from_text(row.genotype, config.max_value);
          stored_fitness = row.fitness;
          eval_seed = row.eval_seed;
          found = true;
          break;
        }
      }
      if (!found)
        throw std::runtime_error("cell (" + std::to_string(target.entropy_bin) +
                                 "," + std::to_string(target.depth_bin) +
                                 ") is empty");
    }
  } else {
    throw std::runtime_error(run_dir +
                             ": no archive.csv/ge_map.csv (for GE cell exports, "
                             "run project-ge-map first)");
  }
  (void)found;

  const Evaluator evaluator = config.make_evaluator();
  const EvaluationResult result = evaluator.evaluate(genotype, eval_seed);
  if (!result.valid)
    throw std::runtime_error("stored genotype no longer decodes; files corrupt?");
  if (result.fitness != stored_fitness)
    throw std::runtime_error(
        "re-evaluated fitness " + format_double(result.fitness) +
        " does not reproduce stored " + format_double(stored_fitness));

  const auto env = make_environment(config.environment);
  const std::string text = render(*result.simplified_tree, env->action_names());
  const fs::path out = dir / "tree.txt";
  write_file(out.string(), text);
  return out.string();
}

}  // namespace qdt
