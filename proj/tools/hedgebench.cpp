// hedgebench: simulate paths, train the hedging network, evaluate strategies
// and regenerate the experiment tables from a flat config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hedgebench/config.hpp"
#include "hedgebench/experiments.hpp"
#include "hedgebench/io.hpp"
#include "hedgebench/simulation.hpp"
#include "hedgebench/training.hpp"

namespace fs = std::filesystem;
using namespace hedgebench;

namespace {

struct GlobalOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> tc;
  std::optional<std::size_t> steps;
};

struct Context {
  RunConfig rc;
  fs::path out_dir;
  std::vector<std::string> outputs;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }
};

Context make_context(const GlobalOptions& g) {
  Context ctx;
  ctx.rc = load_run_config(g.config);
  if (g.seed) ctx.rc.experiment.train_seed = *g.seed;
  if (g.jobs) ctx.rc.jobs = *g.jobs;
  if (g.tc) ctx.rc.tc = *g.tc;
  if (g.steps) ctx.rc.experiment.steps = *g.steps;
  ctx.rc.resolve();

  std::string out = g.out;
  if (out.empty()) out = ctx.rc.out;
  if (out.empty())
    if (const char* env = std::getenv("HEDGEBENCH_OUT")) out = env;
  if (out.empty()) out = ".";
  ctx.out_dir = out;
  fs::create_directories(ctx.out_dir);
  return ctx;
}

void write_manifest(Context& ctx, const std::string& command, json extra = json::object()) {
  json m;
  m["tool"] = "hedgebench";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = experiment_config_json(ctx.rc.experiment);
  m["config"]["tc"] = ctx.rc.tc;
  m["config_hash"] = config_hash(ctx.rc.experiment);
  m["seeds"] = {{"train", ctx.rc.experiment.train_seed},
                {"test", ctx.rc.experiment.test_seed},
                {"init", ctx.rc.experiment.init_seed}};
  m["jobs"] = ctx.rc.jobs;
  for (auto& [k, v] : extra.items()) m[k] = v;
  ctx.outputs.push_back("manifest.json");
  m["outputs"] = ctx.outputs;
  write_text_file((ctx.out_dir / "manifest.json").string(), m.dump(2) + "\n");
}

std::string to_csv(const PathSet& p) {
  std::ostringstream s;
  write_paths_csv(s, p);
  return s.str();
}

PathSet load_paths(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open paths file '" + file + "'");
  auto p = read_paths_csv(in);
  if (!p.t0_normalized()) p.normalize();
  return p;
}

void echo_vols(const PathSet& p) {
  if (p.n_paths() < 2 || p.n_points() < 3) return;
  const auto v = vol_stats(p);
  std::cout << "realized vol: min " << v.min << " max " << v.max << " mean " << v.mean << " std " << v.std << "\n";
}

int cmd_simulate(const GlobalOptions& g) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  auto paths = simulate_gbm(e.market, e.steps, e.n_paths, RngSeed{e.train_seed});
  paths.normalize();
  write_text_file(ctx.file("paths.csv").string(), to_csv(paths));
  echo_vols(paths);
  json extra;
  if (paths.n_points() >= 3) extra["vol_stats"] = vol_stats_json(vol_stats(paths));
  write_manifest(ctx, "simulate", extra);
  return 0;
}

int cmd_ingest(const GlobalOptions& g, const std::string& csv, const std::string& column) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  const auto series = ingest_csv(csv, column.empty() ? e.csv_column : column);
  std::cout << "ingested " << series.size() << " prices from " << csv << "\n";
  const auto paths = overlapping_paths(series, e.steps, e.n_paths, e.dt());
  write_text_file(ctx.file("paths.csv").string(), to_csv(paths));
  echo_vols(paths);
  json extra;
  extra["source"] = {{"file", csv}, {"count", series.size()}};
  if (paths.n_points() >= 3) extra["vol_stats"] = vol_stats_json(vol_stats(paths));
  write_manifest(ctx, "ingest", extra);
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& paths_file) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  PathSet train_paths;
  if (paths_file.empty()) {
    train_paths = build_datasets(e).train;
  } else {
    train_paths = load_paths(paths_file);
  }
  const auto cfg = train_config_for(e, ctx.rc.tc);
  const auto res = train(cfg, train_paths);
  write_text_file(ctx.file("params.json").string(),
                  params_to_json(res.params, e.init_seed, config_hash(e)).dump(2) + "\n");
  std::ostringstream loss;
  write_loss_csv(loss, res.history);
  write_text_file(ctx.file("loss_history.csv").string(), loss.str());
  std::cout << "steps " << res.history.size() << " first loss " << res.history.front().loss << " last loss "
            << res.history.back().loss << "\n";
  write_manifest(ctx, "train", {{"steps", res.history.size()}});
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& paths_file, const std::string& strategy_name,
                 const std::string& params_file) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  const PathSet paths = paths_file.empty() ? build_datasets(e).test : load_paths(paths_file);
  const OptionSpec spec = e.option();
  Strategy strategy;
  if (strategy_name == "bs") {
    strategy = bs_strategy(e.market.sigma, spec, e.market.r);
  } else if (strategy_name == "leland") {
    strategy = leland_strategy(e.market.sigma, ctx.rc.tc, paths.dt(), spec, e.market.r);
  } else if (strategy_name == "nn") {
    if (params_file.empty()) throw std::runtime_error("evaluate: --strategy nn needs --params");
    strategy = nn_strategy(read_params_file(params_file));
  } else if (strategy_name == "zero") {
    strategy = constant_strategy(0.0);
  } else {
    throw std::runtime_error("evaluate: unknown strategy '" + strategy_name + "' (bs|leland|nn|zero)");
  }
  const auto rep = evaluate(paths, strategy, spec, e.market.r, CostModel{ctx.rc.tc}, e.bins, ctx.rc.jobs);
  std::ostringstream costs;
  write_costs_csv(costs, rep);
  write_text_file(ctx.file("costs.csv").string(), costs.str());
  auto summary = report_to_json(rep);
  summary["strategy"] = strategy_name;
  summary["tc"] = ctx.rc.tc;
  write_text_file(ctx.file("report.json").string(), summary.dump(2) + "\n");
  std::cout << "mean " << 100.0 * rep.mean << "% std " << 100.0 * rep.std << "%\n";
  write_manifest(ctx, "evaluate", {{"strategy", strategy_name}});
  return 0;
}

int cmd_bench(const GlobalOptions& g) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  const auto res = run_tables(e, ctx.rc.jobs);

  std::ostringstream tables, loss, hist, surface;
  write_tables_csv(tables, res.rows());
  write_loss_csv(loss, res.cells);
  write_histogram_header(hist);
  const char* sets[2] = {"train", "test"};
  for (const auto& cell : res.cells)
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 3; ++k)
        write_histogram_rows(hist, cell.alpha, sets[s], to_string(static_cast<StrategyKind>(k)),
                             cell.reports[s][k].histogram);
  // Surface of the lowest-cost cell on the train set.
  std::size_t lowest = 0;
  for (std::size_t i = 1; i < res.cells.size(); ++i)
    if (res.cells[i].alpha < res.cells[lowest].alpha) lowest = i;
  write_surface_csv(surface, delta_surface_dump(res.cells[lowest].trained.params, res.data.train, e.option(),
                                                e.market.sigma, e.market.r));

  write_text_file(ctx.file("tables.csv").string(), tables.str());
  write_text_file(ctx.file("loss_history.csv").string(), loss.str());
  write_text_file(ctx.file("histogram.csv").string(), hist.str());
  write_text_file(ctx.file("delta_surface.csv").string(), surface.str());
  for (const auto& row : res.rows())
    std::cout << row.alpha << " " << row.set << " " << to_string(row.strategy) << " mean " << row.mean << "% std "
              << row.std << "%\n";
  json extra;
  if (res.data.train_vols) extra["train_vol_stats"] = vol_stats_json(*res.data.train_vols);
  if (res.data.test_vols) extra["test_vol_stats"] = vol_stats_json(*res.data.test_vols);
  extra["surface_alpha"] = res.cells[lowest].alpha;
  write_manifest(ctx, "bench", extra);
  return 0;
}

int cmd_diverge(const GlobalOptions& g) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  const auto rows = divergence_study(e.market, ctx.rc.fixed_nu(), ctx.rc.diverge_alphas, ctx.rc.n_list,
                                     ctx.rc.diverge_paths, e.train_seed, e.strike, ctx.rc.jobs);
  std::ostringstream out;
  write_divergence_csv(out, rows);
  write_text_file(ctx.file("divergence.csv").string(), out.str());
  for (const auto& r : rows)
    std::cout << "alpha " << r.alpha << " n " << r.n << " mean tc " << r.mean_tc << " ratio " << r.ratio << "\n";
  write_manifest(ctx, "diverge", {{"nu", ctx.rc.fixed_nu()}, {"n_list", ctx.rc.n_list},
                                  {"diverge_paths", ctx.rc.diverge_paths}});
  return 0;
}

int cmd_surface(const GlobalOptions& g, const std::string& params_file, const std::string& paths_file) {
  auto ctx = make_context(g);
  const auto& e = ctx.rc.experiment;
  if (params_file.empty()) throw std::runtime_error("surface: --params is required");
  const PathSet paths = paths_file.empty() ? build_datasets(e).train : load_paths(paths_file);
  const auto pts = delta_surface_dump(read_params_file(params_file), paths, e.option(), e.market.sigma, e.market.r);
  std::ostringstream out;
  write_surface_csv(out, pts);
  write_text_file(ctx.file("delta_surface.csv").string(), out.str());
  write_manifest(ctx, "surface");
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-hedging benchmark: Black-Scholes, Leland and neural-network hedges under transaction costs"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  std::size_t jobs = 1, steps = 0;
  double tc = 0.0;
  app.add_option("--config", g.config, "Flat key = value run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (falls back to config 'out', then $HEDGEBENCH_OUT)");
  auto* seed_opt = app.add_option("--seed", seed, "Override seed_value");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads (default 1)")->check(CLI::PositiveNumber);
  auto* tc_opt = app.add_option("--tc", tc, "Override the transaction-cost rate tc");
  auto* steps_opt = app.add_option("--steps", steps, "Override steps")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Simulate GBM paths to paths.csv");
  auto* ingest = app.add_subcommand("ingest", "Cut overlapping windows from a price CSV into paths.csv");
  std::string csv_file, csv_column;
  ingest->add_option("--csv", csv_file, "Price CSV with a header row")->required()->check(CLI::ExistingFile);
  ingest->add_option("--column", csv_column, "Price column (default: config csv_column)");

  std::string paths_file, params_file, strategy = "bs";
  auto* train_cmd = app.add_subcommand("train", "Train the hedging network");
  train_cmd->add_option("--paths", paths_file, "Training paths CSV (default: simulate from config)");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Hedging costs of one strategy");
  evaluate_cmd->add_option("--paths", paths_file, "Paths CSV (default: simulated test set)");
  evaluate_cmd->add_option("--strategy", strategy, "bs | leland | nn | zero");
  evaluate_cmd->add_option("--params", params_file, "Network parameters JSON for --strategy nn");
  auto* bench = app.add_subcommand("bench", "Regenerate the strategy comparison tables");
  auto* diverge = app.add_subcommand("diverge", "Transaction costs of fixed-volatility hedges as n grows");
  auto* surface = app.add_subcommand("surface", "Dump network vs Black-Scholes deltas at visited points");
  surface->add_option("--params", params_file, "Network parameters JSON")->required();
  surface->add_option("--paths", paths_file, "Paths CSV (default: simulated train set)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", one_line(e.what())}, {"kind", "usage"}}.dump() << "\n";
    return 2;
  }
  if (*seed_opt) g.seed = seed;
  if (*jobs_opt) g.jobs = jobs;
  if (*tc_opt) g.tc = tc;
  if (*steps_opt) g.steps = steps;

  try {
    if (*simulate) return cmd_simulate(g);
    if (*ingest) return cmd_ingest(g, csv_file, csv_column);
    if (*train_cmd) return cmd_train(g, paths_file);
    if (*evaluate_cmd) return cmd_evaluate(g, paths_file, strategy, params_file);
    if (*bench) return cmd_bench(g);
    if (*diverge) return cmd_diverge(g);
    if (*surface) return cmd_surface(g, params_file, paths_file);
  } catch (const ConfigError& e) {
    std::cerr << json{{"error", one_line(e.what())}, {"kind", "config"}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", one_line(e.what())}, {"kind", "runtime"}}.dump() << "\n";
    return 1;
  }
  return 1;
}
