#include "mvstdm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mvstdm/errors.hpp"
#include "mvstdm/grid.hpp"

namespace mvstdm {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* block, std::initializer_list<const char*> allowed,
                std::vector<std::string>& unknown) {
  if (!j.is_object()) {
    unknown.push_back(fmt::format("'{}' must be an object", block));
    return;
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) unknown.push_back(fmt::format("unknown key '{}{}{}'", block, *block ? "." : "", key));
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

HoldoutKind parse_kind(const std::string& s) {
  if (s == "spatial_block" || s == "spatial-block") return HoldoutKind::spatial_block;
  if (s == "random" || s == "random_fraction") return HoldoutKind::random_fraction;
  throw ValidationError(fmt::format("holdout kind '{}' is not spatial_block or random", s));
}

}  // namespace

std::string to_string(FitMode mode) {
  switch (mode) {
    case FitMode::multivariate: return "multivariate";
    case FitMode::univariate: return "univariate";
    case FitMode::univariate_rw: return "univariate-rw";
  }
  return "multivariate";
}

FitMode parse_fit_mode(const std::string& text) {
  if (text == "multivariate") return FitMode::multivariate;
  if (text == "univariate") return FitMode::univariate;
  if (text == "univariate-rw" || text == "univariate_rw") return FitMode::univariate_rw;
  throw ValidationError(
      fmt::format("mode '{}' is not multivariate, univariate or univariate-rw", text));
}

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> p;
  auto need = [&p](bool ok, std::string msg) {
    if (!ok) p.push_back(std::move(msg));
  };
  need(!m || *m >= 1, "model.M must be >= 1");
  need(grid_level >= 0 && grid_level <= kMaxGridLevel,
       fmt::format("model.grid_level must lie in [0, {}]", kMaxGridLevel));
  need(kappa > 0.0, "model.kappa must be positive");
  need(range_factor > 0.0, "model.range_factor must be positive");
  need(a_sigma > 0.0 && b_sigma > 0.0, "prior.a_sigma and prior.b_sigma must be positive");
  need(a_tau > 0.0 && b_tau > 0.0, "prior.a_tau and prior.b_tau must be positive");
  need(lambda > 0.0, "prior.lambda must be positive");
  need(c0 > 0.0, "prior.c0 must be positive");
  need(sampler.n_iter >= 1, "sampler.n_iter must be >= 1");
  need(sampler.burn_in >= 0 && sampler.burn_in < sampler.n_iter,
       "sampler.burn_in must lie in [0, n_iter)");
  need(sampler.thin >= 1, "sampler.thin must be >= 1");
  need(sampler.n_chains >= 1, "sampler.n_chains must be >= 1");

  if (mode == FitMode::multivariate) {
    need(mode_variable.empty(), "multivariate mode takes no mode variable");
  } else {
    need(!mode_variable.empty(), fmt::format("{} mode needs a variable name", to_string(mode)));
  }

  if (holdout) {
    const HoldoutSpec& h = holdout->spec;
    need(!holdout->variable.empty(), "holdout.variable is required");
    if (h.kind == HoldoutKind::random_fraction) {
      need(h.fraction > 0.0 && h.fraction < 1.0, "holdout.fraction must lie in (0, 1)");
    } else {
      need(h.lon_min <= h.lon_max, "holdout.lon_min must not exceed lon_max");
      need(h.lat_min <= h.lat_max, "holdout.lat_min must not exceed lat_max");
    }
    need(!(h.time_start && h.time_end && *h.time_end < *h.time_start),
         "holdout.time_end precedes time_start");
    if (mode != FitMode::multivariate && !holdout->variable.empty()) {
      need(holdout->variable == mode_variable,
           "holdout.variable must be the fitted variable in univariate modes");
    }
  }

  if (preprocess) {
    need(!preprocess->regrid || (preprocess->nlat >= 1 && preprocess->nlon >= 1),
         "preprocess.regrid dimensions must be positive");
    need(!preprocess->climatology_years ||
             preprocess->climatology_years->first <= preprocess->climatology_years->second,
         "preprocess.climatology_years must be [first, last]");
  }

  const SimulateConfig& s = simulate;
  need(s.preset == "recovery" || s.preset == "reduced" || s.preset == "custom",
       fmt::format("simulate.preset '{}' is not recovery, reduced or custom", s.preset));
  if (s.preset == "custom") {
    need(s.m >= 1, "simulate.M must be >= 1");
    need(s.t >= 1, "simulate.T must be >= 1");
    need(s.nlat >= 1 && s.nlon >= 1, "simulate.nlat and simulate.nlon must be >= 1");
    need(s.tau2.size() == 1 || static_cast<int>(s.tau2.size()) == s.m,
         "simulate.tau2 must hold 1 or M values");
    for (double v : s.tau2) need(v > 0.0, "simulate.tau2 values must be positive");
    need(s.sigma2 > 0.0, "simulate.sigma2 must be positive");
    need(s.burn_in_steps >= 0, "simulate.burn_in_steps must be >= 0");
    try {
      TimeLabel::parse(s.start);
    } catch (const std::exception&) {
      p.push_back(fmt::format("simulate.start '{}' is not YYYY-MM", s.start));
    }
    if (s.transition.is_string()) {
      const auto name = s.transition.get<std::string>();
      need(name == "recovery" || name == "identity",
           fmt::format("simulate.transition '{}' is not recovery, identity or an object", name));
      need(name != "recovery" || s.m == 3, "the recovery transition needs M = 3");
    } else {
      need(s.transition.is_object(), "simulate.transition must be a name or an object");
    }
  }
  return p;
}

void RunConfig::validate() const {
  const auto p = problems();
  if (!p.empty()) {
    throw ValidationError(fmt::format("invalid configuration: {}", fmt::join(p, "; ")));
  }
}

json RunConfig::to_json() const {
  json j;
  j["paths"] = {{"data", data.string()}, {"output", output.string()}, {"draws", draws.string()}};
  j["model"] = {{"grid_level", grid_level}, {"kappa", kappa}, {"range_factor", range_factor}};
  if (m) j["model"]["M"] = *m;
  j["prior"] = {{"a_sigma", a_sigma}, {"b_sigma", b_sigma}, {"a_tau", a_tau}, {"b_tau", b_tau},
                {"lambda", lambda},   {"m0", m0},           {"c0", c0}};
  j["sampler"] = {{"n_iter", sampler.n_iter},     {"burn_in", sampler.burn_in},
                  {"thin", sampler.thin},         {"n_chains", sampler.n_chains},
                  {"seed", sampler.seed},         {"store_states", sampler.store_states}};
  j["mode"] = to_string(mode);
  if (!mode_variable.empty()) j["mode_variable"] = mode_variable;
  if (holdout) {
    const HoldoutSpec& h = holdout->spec;
    json hj = {{"variable", holdout->variable}};
    if (h.kind == HoldoutKind::random_fraction) {
      hj["kind"] = "random";
      hj["fraction"] = h.fraction;
      hj["seed"] = h.seed;
    } else {
      hj["kind"] = "spatial_block";
      hj["lon_min"] = h.lon_min;
      hj["lon_max"] = h.lon_max;
      hj["lat_min"] = h.lat_min;
      hj["lat_max"] = h.lat_max;
    }
    if (h.time_start) hj["time_start"] = h.time_start->str();
    if (h.time_end) hj["time_end"] = h.time_end->str();
    j["holdout"] = hj;
  }
  if (preprocess) {
    json pj = {{"weighted", preprocess->weighted}};
    if (preprocess->regrid) pj["regrid"] = {preprocess->nlat, preprocess->nlon};
    if (preprocess->climatology_years) {
      pj["climatology_years"] = {preprocess->climatology_years->first,
                                 preprocess->climatology_years->second};
    }
    j["preprocess"] = pj;
  }
  j["simulate"] = {{"preset", simulate.preset},   {"M", simulate.m},
                   {"T", simulate.t},             {"nlat", simulate.nlat},
                   {"nlon", simulate.nlon},       {"tau2", simulate.tau2},
                   {"sigma2", simulate.sigma2},   {"burn_in_steps", simulate.burn_in_steps},
                   {"start", simulate.start},     {"transition", simulate.transition}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  std::vector<std::string> bad;
  try {
    check_keys(j, "",
               {"paths", "model", "prior", "sampler", "holdout", "mode", "mode_variable",
                "preprocess", "simulate"},
               bad);
    if (j.contains("paths")) {
      const json& p = j["paths"];
      check_keys(p, "paths", {"data", "output", "draws"}, bad);
      if (p.contains("data")) c.data = p["data"].get<std::string>();
      if (p.contains("output")) c.output = p["output"].get<std::string>();
      if (p.contains("draws")) c.draws = p["draws"].get<std::string>();
    }
    if (j.contains("model")) {
      const json& m = j["model"];
      check_keys(m, "model", {"M", "grid_level", "kappa", "range_factor"}, bad);
      if (m.contains("M") && !m["M"].is_null()) c.m = m["M"].get<int>();
      read(m, "grid_level", c.grid_level);
      read(m, "kappa", c.kappa);
      read(m, "range_factor", c.range_factor);
    }
    if (j.contains("prior")) {
      const json& p = j["prior"];
      check_keys(p, "prior", {"a_sigma", "b_sigma", "a_tau", "b_tau", "lambda", "m0", "c0"}, bad);
      read(p, "a_sigma", c.a_sigma);
      read(p, "b_sigma", c.b_sigma);
      read(p, "a_tau", c.a_tau);
      read(p, "b_tau", c.b_tau);
      read(p, "lambda", c.lambda);
      read(p, "m0", c.m0);
      read(p, "c0", c.c0);
    }
    if (j.contains("sampler")) {
      const json& s = j["sampler"];
      check_keys(s, "sampler", {"n_iter", "burn_in", "thin", "n_chains", "seed", "store_states"}, bad);
      read(s, "n_iter", c.sampler.n_iter);
      read(s, "burn_in", c.sampler.burn_in);
      read(s, "thin", c.sampler.thin);
      read(s, "n_chains", c.sampler.n_chains);
      read(s, "seed", c.sampler.seed);
      read(s, "store_states", c.sampler.store_states);
    }
    if (j.contains("mode")) c.mode = parse_fit_mode(j["mode"].get<std::string>());
    read(j, "mode_variable", c.mode_variable);
    if (j.contains("holdout") && !j["holdout"].is_null()) {
      const json& h = j["holdout"];
      check_keys(h, "holdout",
                 {"kind", "variable", "fraction", "seed", "lon_min", "lon_max", "lat_min", "lat_max",
                  "time_start", "time_end"},
                 bad);
      HoldoutConfig hc;
      if (h.contains("kind")) hc.spec.kind = parse_kind(h["kind"].get<std::string>());
      read(h, "variable", hc.variable);
      read(h, "fraction", hc.spec.fraction);
      read(h, "seed", hc.spec.seed);
      read(h, "lon_min", hc.spec.lon_min);
      read(h, "lon_max", hc.spec.lon_max);
      read(h, "lat_min", hc.spec.lat_min);
      read(h, "lat_max", hc.spec.lat_max);
      if (h.contains("time_start")) hc.spec.time_start = TimeLabel::parse(h["time_start"].get<std::string>());
      if (h.contains("time_end")) hc.spec.time_end = TimeLabel::parse(h["time_end"].get<std::string>());
      c.holdout = hc;
    }
    if (j.contains("preprocess") && !j["preprocess"].is_null()) {
      const json& p = j["preprocess"];
      check_keys(p, "preprocess", {"regrid", "weighted", "climatology_years"}, bad);
      PreprocessConfig pc;
      if (p.contains("regrid")) {
        const auto dims = p["regrid"].get<std::vector<std::size_t>>();
        if (dims.size() != 2) throw ValidationError("preprocess.regrid must be [nlat, nlon]");
        pc.regrid = true;
        pc.nlat = dims[0];
        pc.nlon = dims[1];
      }
      read(p, "weighted", pc.weighted);
      if (p.contains("climatology_years")) {
        const auto years = p["climatology_years"].get<std::vector<int>>();
        if (years.size() != 2) throw ValidationError("preprocess.climatology_years must be [first, last]");
        pc.climatology_years = std::make_pair(years[0], years[1]);
      }
      c.preprocess = pc;
    }
    if (j.contains("simulate")) {
      const json& s = j["simulate"];
      check_keys(s, "simulate",
                 {"preset", "M", "T", "nlat", "nlon", "tau2", "sigma2", "burn_in_steps", "start",
                  "transition"},
                 bad);
      read(s, "preset", c.simulate.preset);
      read(s, "M", c.simulate.m);
      read(s, "T", c.simulate.t);
      read(s, "nlat", c.simulate.nlat);
      read(s, "nlon", c.simulate.nlon);
      if (s.contains("tau2")) {
        c.simulate.tau2 = s["tau2"].is_array() ? s["tau2"].get<std::vector<double>>()
                                               : std::vector<double>{s["tau2"].get<double>()};
      }
      read(s, "sigma2", c.simulate.sigma2);
      read(s, "burn_in_steps", c.simulate.burn_in_steps);
      read(s, "start", c.simulate.start);
      if (s.contains("transition")) c.simulate.transition = s["transition"];
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("invalid configuration: {}", e.what()));
  }
  if (!bad.empty()) throw ValidationError(fmt::format("invalid configuration: {}", fmt::join(bad, "; ")));
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
  }
  return from_json(j);
}

Priors RunConfig::priors(int mk) const {
  Priors p = Priors::uniform(mk, m0, c0);
  p.a_sigma = a_sigma;
  p.b_sigma = b_sigma;
  p.a_tau = a_tau;
  p.b_tau = b_tau;
  p.lambda = lambda;
  return p;
}

SimSpec RunConfig::sim_spec() const {
  validate();
  if (simulate.preset == "recovery") return full_recovery_spec(sampler.seed);
  if (simulate.preset == "reduced") return reduced_recovery_spec(sampler.seed);
  const SimulateConfig& s = simulate;
  SimSpec spec;
  spec.grid_level = grid_level;
  spec.m = s.m;
  spec.t = s.t;
  spec.nlat = s.nlat;
  spec.nlon = s.nlon;
  spec.tau2.resize(s.m);
  for (int i = 0; i < s.m; ++i) spec.tau2[i] = s.tau2.size() == 1 ? s.tau2[0] : s.tau2[static_cast<std::size_t>(i)];
  spec.sigma2 = Eigen::MatrixXd::Constant(s.t, s.m, s.sigma2);
  spec.kappa = kappa;
  spec.range_factor = range_factor;
  spec.burn_in_steps = s.burn_in_steps;
  spec.seed = sampler.seed;
  spec.start = TimeLabel::parse(s.start);
  const int k = static_cast<int>(icosahedral_node_count(grid_level));
  if (s.transition.is_string()) {
    spec.transition = s.transition.get<std::string>() == "identity"
                          ? TransitionBlocks::identity(s.m, k)
                          : build_recovery_transition(build_icosahedral_grid(grid_level));
  } else {
    spec.transition = transition_from_json(s.transition.dump());
  }
  spec.validate();
  return spec;
}

}  // namespace mvstdm
