// Command-line front end: grid, simulate, fit, predict, score, project.

#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvstdm/commands.hpp"
#include "mvstdm/config.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string data, output, draws;
  std::optional<int> grid_level;
  std::optional<double> kappa, range_factor;
  std::optional<int> n_iter, burn_in, thin, n_chains;
  std::optional<std::uint64_t> seed;
  bool store_states = false;
  std::string mode, variable;
  std::string preset;
  std::optional<int> sim_t;

  void add_common(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON run configuration");
    app->add_option("--out", output, "Output path");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--grid-level", grid_level, "Icosahedral grid level");
    app->add_option("--kappa", kappa, "SAR kappa");
    app->add_option("--range-factor", range_factor, "Wendland range / mean node spacing");
  }
  void add_data(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory");
    app->add_option("--mode", mode, "multivariate, univariate or univariate-rw");
    app->add_option("--variable", variable, "Variable fitted in univariate modes");
  }

  mvstdm::RunConfig resolve() const {
    mvstdm::RunConfig c = config.empty() ? mvstdm::RunConfig{} : mvstdm::RunConfig::load(config);
    if (!data.empty()) c.data = data;
    if (!output.empty()) c.output = output;
    if (!draws.empty()) c.draws = draws;
    if (grid_level) c.grid_level = *grid_level;
    if (kappa) c.kappa = *kappa;
    if (range_factor) c.range_factor = *range_factor;
    if (n_iter) c.sampler.n_iter = *n_iter;
    if (burn_in) c.sampler.burn_in = *burn_in;
    if (thin) c.sampler.thin = *thin;
    if (n_chains) c.sampler.n_chains = *n_chains;
    if (seed) c.sampler.seed = *seed;
    if (store_states) c.sampler.store_states = true;
    if (!mode.empty()) c.mode = mvstdm::parse_fit_mode(mode);
    if (!variable.empty()) c.mode_variable = variable;
    if (!preset.empty()) c.simulate.preset = preset;
    if (sim_t) {
      c.simulate.preset = "custom";
      c.simulate.t = *sim_t;
    }
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate space-time dynamic model"};
  app.require_subcommand(1);
  Overrides o;

  int level = 1;
  std::string grid_out;
  auto* grid = app.add_subcommand("grid", "Export the icosahedral basis grid as JSON");
  grid->add_option("--level", level, "Subdivision level")->required();
  grid->add_option("--out", grid_out, "Output JSON file")->required();

  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset with a truth sidecar");
  o.add_common(simulate);
  simulate->add_option("--preset", o.preset, "recovery, reduced or custom");
  simulate->add_option("--T", o.sim_t, "Time steps (switches to a custom simulation)");

  bool quiet = false;
  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler and write a draw directory");
  o.add_common(fit);
  o.add_data(fit);
  fit->add_option("--n-iter", o.n_iter, "Iterations per chain");
  fit->add_option("--burn-in", o.burn_in, "Discarded iterations");
  fit->add_option("--thin", o.thin, "Thinning interval");
  fit->add_option("--chains", o.n_chains, "Number of chains");
  fit->add_flag("--store-states", o.store_states, "Keep state draws (needed by predict)");
  fit->add_flag("-q,--quiet", quiet, "No progress lines");

  auto* predict = app.add_subcommand("predict", "Score held-out entries of a fit");
  o.add_common(predict);
  o.add_data(predict);
  predict->add_option("--draws", o.draws, "Draw directory");

  std::vector<std::string> inputs;
  std::string score_out;
  auto* score = app.add_subcommand("score", "Aggregate prediction files into score tables");
  score->add_option("--input", inputs, "Prediction CSV files")->required();
  score->add_option("--out", score_out, "Output directory")->required();

  std::string project_draws, project_out;
  auto* project = app.add_subcommand("project", "Project transition blocks onto the data grid");
  project->add_option("--draws", project_draws, "Draw directory")->required();
  project->add_option("--out", project_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  return mvstdm::run_guarded([&] {
    if (*grid) {
      mvstdm::cmd_grid(level, grid_out);
    } else if (*simulate) {
      mvstdm::cmd_simulate(o.resolve());
    } else if (*fit) {
      mvstdm::cmd_fit(o.resolve(), !quiet);
    } else if (*predict) {
      mvstdm::cmd_predict(o.resolve());
    } else if (*score) {
      mvstdm::cmd_score({inputs.begin(), inputs.end()}, score_out);
    } else if (*project) {
      mvstdm::cmd_project(project_draws, project_out);
    }
  });
}
