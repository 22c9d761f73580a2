#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdt/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quality-diversity evolution of oblique decision-tree policies"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run an experiment (n_runs replicates)");
  std::string algo, env, config_file, out_dir = "out";
  std::uint64_t seed = 1;
  int runs = 5, threads = 1;
  bool log_all = false;
  std::vector<std::string> overrides;
  auto* algo_opt = run->add_option("--algo", algo, "ge | me");
  auto* env_opt = run->add_option("--env", env, "cartpole | mountaincar");
  run->add_option("--config", config_file, "key=value config file");
  auto* seed_opt = run->add_option("--seed", seed, "master seed");
  auto* runs_opt = run->add_option("--runs", runs, "number of replicate runs");
  auto* threads_opt =
      run->add_option("--threads", threads, "evaluation worker threads");
  run->add_flag("--log-all-evals", log_all,
                "record every evaluation in evals.csv");
  run->add_option("--set", overrides, "override any config key (key=value)");
  run->add_option("--out", out_dir, "output directory");

  // aggregate
  auto* aggregate = app.add_subcommand(
      "aggregate", "Average/max maps and trend summary over runs");
  std::string agg_out;
  std::vector<std::string> agg_dirs;
  aggregate->add_option("--out", agg_out, "output directory")->required();
  aggregate->add_option("dirs", agg_dirs, "run directories")->required();

  // project-ge-map
  auto* project = app.add_subcommand(
      "project-ge-map", "Fill an archive from a GE run's evaluation log");
  std::string project_dir;
  project->add_option("dir", project_dir, "GE run directory")->required();

  // export-tree
  auto* export_cmd =
      app.add_subcommand("export-tree", "Render one stored elite to tree.txt");
  std::string export_dir, cell;
  bool best = false;
  export_cmd->add_option("dir", export_dir, "run directory")->required();
  auto* cell_opt = export_cmd->add_option(
      "--cell", cell, "entropy_bin,depth_bin of the archive cell");
  export_cmd->add_flag("--best", best, "export the best elite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      // precedence: defaults for (algo, env) < config file < command line
      std::vector<std::pair<std::string, std::string>> file_kv;
      if (!config_file.empty()) file_kv = qdt::parse_key_value_file(config_file);

      std::string algo_name = algo, env_name = env;
      for (const auto& [k, v] : file_kv) {
        if (k == "algorithm" && algo_name.empty()) algo_name = v;
        if (k == "environment" && env_name.empty()) env_name = v;
      }
      if (algo_name.empty() || env_name.empty())
        throw std::runtime_error(
            "--algo and --env are required (directly or via --config)");

      qdt::ExperimentConfig config = qdt::ExperimentConfig::defaults(
          qdt::parse_algo(algo_name), qdt::parse_env_id(env_name));
      for (const auto& [k, v] : file_kv) config.apply(k, v);
      if (algo_opt->count()) config.apply("algorithm", algo);
      if (env_opt->count()) config.apply("environment", env);
      if (seed_opt->count()) config.master_seed = seed;
      if (runs_opt->count()) config.n_runs = runs;
      if (threads_opt->count()) config.n_threads = threads;
      if (log_all) config.log_all_evals = true;
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("--set expects key=value, got: " + kv);
        config.apply(kv.substr(0, eq), kv.substr(eq + 1));
      }
      config.validate();
      qdt::run_experiment(config, out_dir);
      std::printf("wrote %d run(s) under %s\n", config.n_runs, out_dir.c_str());
    } else if (*aggregate) {
      qdt::aggregate_runs(agg_dirs, agg_out);
      std::printf("wrote average_map.csv, max_map.csv, trend_summary.csv under %s\n",
                  agg_out.c_str());
    } else if (*project) {
      qdt::project_ge_map(project_dir);
      std::printf("wrote %s/ge_map.csv\n", project_dir.c_str());
    } else if (*export_cmd) {
      qdt::ExportTarget target;
      if (best == cell_opt->count()) {
        throw std::runtime_error("pass exactly one of --best or --cell R,C");
      }
      target.best = best;
      if (!best) {
        const auto comma = cell.find(',');
        if (comma == std::string::npos)
          throw std::runtime_error("--cell expects R,C");
        target.entropy_bin = std::stoi(cell.substr(0, comma));
        target.depth_bin = std::stoi(cell.substr(comma + 1));
      }
      const std::string path = qdt::export_tree(export_dir, target);
      std::printf("wrote %s\n", path.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
