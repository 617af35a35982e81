#include "mvstdm/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mvstdm/basis.hpp"
#include "mvstdm/draws_io.hpp"
#include "mvstdm/errors.hpp"
#include "mvstdm/grid.hpp"
#include "mvstdm/simulate.hpp"
#include "mvstdm/sparse_io.hpp"

namespace mvstdm {

namespace {

using nlohmann::json;

json grid_json(const LatLonGrid& g) {
  return {{"nlat", g.nlat},       {"nlon", g.nlon},       {"lat_min", g.lat_min},
          {"lat_max", g.lat_max}, {"lon_min", g.lon_min}, {"lon_max", g.lon_max}};
}

LatLonGrid grid_from_json(const json& j) {
  LatLonGrid g;
  g.nlat = j.at("nlat").get<std::size_t>();
  g.nlon = j.at("nlon").get<std::size_t>();
  g.lat_min = j.at("lat_min").get<double>();
  g.lat_max = j.at("lat_max").get<double>();
  g.lon_min = j.at("lon_min").get<double>();
  g.lon_max = j.at("lon_max").get<double>();
  return g;
}

int variable_index(const ObservationTensor& obs, const std::string& name, const char* role) {
  const auto it = std::find(obs.variables.begin(), obs.variables.end(), name);
  if (it == obs.variables.end()) {
    throw ValidationError(fmt::format("{} variable '{}' is not in the dataset", role, name));
  }
  return static_cast<int>(it - obs.variables.begin());
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

void require_path(const std::filesystem::path& p, const char* name) {
  if (p.empty()) throw ValidationError(fmt::format("{} is required", name));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

FitData load_fit_data(const RunConfig& config) {
  config.validate();
  require_path(config.data, "paths.data");
  std::vector<GriddedSeries> series = load_dataset(config.data);
  if (config.preprocess) {
    const PreprocessConfig& p = *config.preprocess;
    for (auto& s : series) {
      if (p.regrid) s = regrid_average(s, p.nlat, p.nlon, p.weighted);
      if (p.climatology_years) {
        const auto [first, last] = *p.climatology_years;
        s = standardize_anomalies(s, compute_climatology(s, first, last));
      }
    }
  }
  FitData fd;
  fd.grid = series.front().grid;
  fd.full = to_observation_tensor(series);
  if (config.m && *config.m != fd.full.m) {
    throw ValidationError(
        fmt::format("model.M is {} but the dataset holds {} variables", *config.m, fd.full.m));
  }
  fd.truth = config.mode == FitMode::multivariate
                 ? fd.full
                 : fd.full.select_variable(variable_index(fd.full, config.mode_variable, "mode"));
  fd.fitted = fd.truth;
  if (config.holdout) {
    HoldoutSpec spec = config.holdout->spec;
    spec.variable = variable_index(fd.truth, config.holdout->variable, "holdout");
    fd.holdout = build_holdout_mask(spec, fd.truth);
    fd.fitted = fd.holdout->apply(fd.truth);
  }
  return fd;
}

ModelSetup model_setup(const RunConfig& config, const std::vector<GeoPoint>& locations) {
  const BasisGrid grid = build_icosahedral_grid(config.grid_level);
  ModelSetup setup;
  setup.phi = build_basis_matrix({grid, config.range_factor, locations});
  setup.sar = build_sar_matrix({grid, config.kappa});
  setup.estimate_transition = config.mode != FitMode::univariate_rw;
  return setup;
}

void cmd_grid(int level, const std::filesystem::path& out) {
  require_path(out, "output path");
  const BasisGrid grid = build_icosahedral_grid(level);
  std::ofstream f = open_out(out);
  f << grid_to_json(grid) << '\n';
  finish(f, out);
}

void cmd_simulate(const RunConfig& config) {
  config.validate();
  require_path(config.output, "paths.output");
  const SimSpec spec = config.sim_spec();
  Rng rng(spec.seed);
  const SimulatedData sim = simulate_dataset(spec, rng);
  for (const auto& w : sim.warnings) fmt::print(stderr, "warning: {}\n", w);

  LatLonGrid grid;
  grid.nlat = spec.nlat;
  grid.nlon = spec.nlon;
  std::vector<GriddedSeries> series;
  for (int i = 0; i < sim.obs.m; ++i) series.push_back(series_from_tensor(sim.obs, i, grid));
  save_dataset(config.output, series);

  json truth;
  truth["preset"] = config.simulate.preset;
  truth["seed"] = spec.seed;
  truth["grid_level"] = spec.grid_level;
  truth["kappa"] = spec.kappa;
  truth["range_factor"] = spec.range_factor;
  truth["M"] = spec.m;
  truth["T"] = spec.t;
  truth["nlat"] = spec.nlat;
  truth["nlon"] = spec.nlon;
  truth["burn_in_steps"] = spec.burn_in_steps;
  truth["start"] = spec.start.str();
  truth["tau2"] = std::vector<double>(spec.tau2.data(), spec.tau2.data() + spec.tau2.size());
  json sigma2 = json::array();
  for (int t = 0; t < spec.t; ++t) {
    std::vector<double> row(static_cast<std::size_t>(spec.m));
    for (int i = 0; i < spec.m; ++i) row[static_cast<std::size_t>(i)] = spec.sigma2(t, i);
    sigma2.push_back(row);
  }
  truth["sigma2"] = sigma2;
  truth["transition"] = json::parse(transition_to_json(spec.transition));
  truth["warnings"] = sim.warnings;
  const auto truth_path = config.output / "truth.json";
  std::ofstream f = open_out(truth_path);
  f << truth.dump(2) << '\n';
  finish(f, truth_path);

  const auto states_path = config.output / "truth_states.csv";
  std::ofstream st = open_out(states_path);
  st << "t,row,value\n";
  const Eigen::MatrixXd& a = sim.states.alphas;
  for (Eigen::Index t = 0; t < a.cols(); ++t) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) st << t << ',' << r << ',' << format_double(a(r, t)) << '\n';
  }
  finish(st, states_path);
}

PosteriorDraws cmd_fit(const RunConfig& config, bool progress) {
  config.validate();
  require_path(config.output, "paths.output");
  const FitData fd = load_fit_data(config);
  const ModelSetup setup = model_setup(config, fd.fitted.locations);
  const Priors priors = config.priors(fd.fitted.m * setup.basis_size());

  std::mutex mu;
  ProgressFn report;
  if (progress) {
    report = [&mu, n = config.sampler.n_iter](int chain, int iter) {
      if ((iter + 1) % 10 != 0 && iter + 1 != n) return;
      const std::lock_guard<std::mutex> lock(mu);
      fmt::print(stderr, "chain {} iteration {}/{}\n", chain, iter + 1, n);
    };
  }
  PosteriorDraws draws = run_chains(fd.fitted, setup, priors, config.sampler, report);
  for (const auto& c : draws.chains) {
    for (const auto& w : c.warnings) fmt::print(stderr, "warning: chain {}: {}\n", c.chain, w);
  }

  json run;
  run["config"] = config.to_json();
  run["mode"] = to_string(config.mode);
  run["variables"] = fd.fitted.variables;
  run["grid"] = grid_json(fd.grid);
  run["start"] = fd.fitted.time_labels.front().str();
  run["transition"] = draws.transition_estimated ? "estimated" : "fixed at identity";
  run["held_out"] = fd.holdout ? fd.holdout->count : 0;
  save_draws(config.output, draws, run);
  return draws;
}

void cmd_predict(const RunConfig& config) {
  config.validate();
  require_path(config.draws, "paths.draws");
  require_path(config.output, "paths.output");
  if (!config.holdout) throw ValidationError("predict needs a holdout block");
  const FitData fd = load_fit_data(config);
  const json manifest = load_draws_manifest(config.draws);
  const PosteriorDraws draws = load_draws(config.draws);
  const ModelSetup setup = model_setup(config, fd.truth.locations);
  if (draws.m != fd.truth.m || draws.t != fd.truth.t || draws.k != setup.basis_size()) {
    throw ValidationError(fmt::format(
        "draws (M={}, T={}, K={}) do not match the configured data (M={}, T={}, K={})", draws.m,
        draws.t, draws.k, fd.truth.m, fd.truth.t, setup.basis_size()));
  }
  const std::vector<HeldOutEntry> entries = held_out_entries(*fd.holdout, fd.truth);
  const Eigen::MatrixXd samples =
      predictive_draws(draws, setup.phi, entries, splitmix64(config.sampler.seed));
  const std::vector<EntryScore> scores = score_entries(samples, entries, fd.truth);

  const std::string model =
      manifest.contains("run") && manifest["run"].contains("mode")
          ? manifest["run"]["mode"].get<std::string>()
          : to_string(config.mode);
  std::ofstream out = open_out(config.output);
  out << "model,variable,time,lat,lon,truth,mean,q025,q975,crps\n";
  for (const EntryScore& s : scores) {
    const GeoPoint& p = fd.truth.locations[static_cast<std::size_t>(s.entry.location)];
    out << model << ',' << fd.truth.variables[static_cast<std::size_t>(s.entry.variable)] << ','
        << s.time.str() << ',' << format_double(p.lat_deg()) << ',' << format_double(p.lon_deg())
        << ',' << format_double(s.truth) << ',' << format_double(s.mean) << ','
        << format_double(s.q025) << ',' << format_double(s.q975) << ',' << format_double(s.crps)
        << '\n';
  }
  finish(out, config.output);
}

void cmd_score(const std::vector<std::filesystem::path>& predictions,
               const std::filesystem::path& out_dir) {
  if (predictions.empty()) throw ValidationError("score needs at least one prediction file");
  require_path(out_dir, "output directory");
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<EntryScore>> groups;
  for (const auto& path : predictions) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    std::string line;
    std::getline(in, line);
    if (line.rfind("model,variable,time,lat,lon,truth,mean,q025,q975,crps", 0) != 0) {
      throw IoError(fmt::format("{} is not a prediction file", path.string()));
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 10) throw IoError(fmt::format("{}:{}: expected 10 fields", path.string(), line_no));
      EntryScore s;
      try {
        s.time = TimeLabel::parse(f[2]);
        s.truth = std::stod(f[5]);
        s.mean = std::stod(f[6]);
        s.q025 = std::stod(f[7]);
        s.q975 = std::stod(f[8]);
        s.crps = std::stod(f[9]);
      } catch (const std::exception&) {
        throw IoError(fmt::format("{}:{}: malformed row", path.string(), line_no));
      }
      const auto key = std::make_pair(f[0], f[1]);
      if (!groups.count(key)) order.push_back(key);
      groups[key].push_back(s);
    }
  }
  std::filesystem::create_directories(out_dir);
  const auto monthly_path = out_dir / "scores_monthly.csv";
  const auto average_path = out_dir / "scores_average.csv";
  std::ofstream monthly = open_out(monthly_path);
  std::ofstream average = open_out(average_path);
  monthly << "model,variable,month,crps,rmspe,n\n";
  average << "model,variable,crps,rmspe,n\n";
  for (const auto& key : order) {
    for (const ScoreRow& r : score_table(key.first, key.second, groups[key])) {
      const std::string tail =
          fmt::format("{},{},{}", format_double(r.crps), format_double(r.rmspe), r.n);
      if (r.month == "all") {
        average << r.model << ',' << r.variable << ',' << tail << '\n';
      } else {
        monthly << r.model << ',' << r.variable << ',' << r.month << ',' << tail << '\n';
      }
    }
  }
  finish(monthly, monthly_path);
  finish(average, average_path);
}

void cmd_project(const std::filesystem::path& draws_dir, const std::filesystem::path& out) {
  require_path(draws_dir, "draws directory");
  require_path(out, "output path");
  const json manifest = load_draws_manifest(draws_dir);
  if (!manifest.value("transition_estimated", false)) {
    throw ValidationError(
        "these draws hold A fixed at the identity (univariate-rw); there is no transition to project");
  }
  RunConfig config;
  LatLonGrid grid;
  try {
    config = RunConfig::from_json(manifest.at("run").at("config"));
    grid = grid_from_json(manifest.at("run").at("grid"));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("draw manifest lacks run information: {}", e.what()));
  }
  const PosteriorDraws draws = load_draws(draws_dir);
  const ModelSetup setup = model_setup(config, canonical_locations(grid));
  if (draws.k != setup.basis_size()) {
    throw ValidationError(fmt::format("draws have K={} but the recorded grid level gives K={}",
                                      draws.k, setup.basis_size()));
  }
  const std::vector<GeoPoint> locations = canonical_locations(grid);
  const std::size_t n = locations.size();
  const std::size_t total = draws.total_draws();
  if (total < 2) throw ValidationError("projection needs at least 2 draws");

  std::ofstream f = open_out(out);
  f << "lat_deg,lon_deg,i,j,post_mean,q025,q975\n";
  Eigen::MatrixXd proj(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(total));
  std::vector<double> row(total);
  for (int i = 0; i < draws.m; ++i) {
    for (int j = 0; j < draws.m; ++j) {
      Eigen::Index col = 0;
      for (const auto& c : draws.chains) {
        for (const auto& blocks : c.transition) {
          proj.col(col++) = project_transition_block(setup.phi, blocks.block(i, j));
        }
      }
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t d = 0; d < total; ++d) {
          row[d] = proj(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d));
        }
        const Summary sum = summarize(row);
        f << format_double(locations[s].lat_deg()) << ',' << format_double(locations[s].lon_deg())
          << ',' << i << ',' << j << ',' << format_double(sum.mean) << ','
          << format_double(sum.q025) << ',' << format_double(sum.q975) << '\n';
      }
    }
  }
  finish(f, out);
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}

}  // namespace mvstdm
