#include "mvstdm/draws_io.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "mvstdm/errors.hpp"
#include "mvstdm/sparse_io.hpp"

namespace mvstdm {

namespace {

using nlohmann::json;

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const char* header) : path_(path), out_(path) {
    if (!out_) throw IoError(fmt::format("cannot write {}", path.string()));
    out_ << header << '\n';
  }
  template <typename... Ints>
  void row(double value, Ints... keys) {
    buf_.clear();
    ((buf_ += std::to_string(keys), buf_ += ','), ...);
    buf_ += format_double(value);
    buf_ += '\n';
    out_ << buf_;
  }
  void close() {
    out_.close();
    if (!out_) throw IoError(fmt::format("failed writing {}", path_.string()));
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::string buf_;
};

// Rows of an integer-keyed CSV: `nkeys` integer columns then one value.
struct CsvRow {
  std::vector<long long> keys;
  double value = 0.0;
};

std::vector<CsvRow> read_rows(const std::filesystem::path& path, std::size_t nkeys) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::string line;
  std::getline(in, line);
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    CsvRow row;
    const char* p = line.c_str();
    for (std::size_t k = 0; k < nkeys; ++k) {
      char* end = nullptr;
      row.keys.push_back(std::strtoll(p, &end, 10));
      if (end == p || *end != ',') {
        throw IoError(fmt::format("{}:{}: malformed row", path.filename().string(), line_no));
      }
      p = end + 1;
    }
    char* end = nullptr;
    row.value = std::strtod(p, &end);
    if (end == p) throw IoError(fmt::format("{}:{}: malformed value", path.filename().string(), line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_draws(const std::filesystem::path& dir, const PosteriorDraws& draws, const json& run) {
  std::filesystem::create_directories(dir);
  const bool with_states = !draws.chains.empty() && !draws.chains.front().states.empty();
  // Remove files a previous run in this directory may have left behind.
  if (!draws.transition_estimated) std::filesystem::remove(dir / "transition.csv");
  if (!with_states) std::filesystem::remove(dir / "states.csv");

  CsvWriter tau(dir / "tau2.csv", "chain,iter,i,value");
  CsvWriter sig(dir / "sigma2.csv", "chain,iter,t,i,value");
  for (const auto& c : draws.chains) {
    for (std::size_t d = 0; d < c.size(); ++d) {
      const int it = c.iterations[d];
      for (int i = 0; i < draws.m; ++i) tau.row(c.tau2[d][i], c.chain, it, i);
      for (int t = 0; t < draws.t; ++t) {
        for (int i = 0; i < draws.m; ++i) sig.row(c.sigma2[d](t, i), c.chain, it, t, i);
      }
    }
  }
  tau.close();
  sig.close();

  if (draws.transition_estimated) {
    CsvWriter tr(dir / "transition.csv", "chain,iter,i,j,k,value");
    for (const auto& c : draws.chains) {
      for (std::size_t d = 0; d < c.size(); ++d) {
        for (int i = 0; i < draws.m; ++i) {
          for (int j = 0; j < draws.m; ++j) {
            for (int k = 0; k < draws.k; ++k) {
              tr.row(c.transition[d].at(i, j, k), c.chain, c.iterations[d], i, j, k);
            }
          }
        }
      }
    }
    tr.close();
  }

  if (with_states) {
    CsvWriter st(dir / "states.csv", "chain,iter,t,row,value");
    for (const auto& c : draws.chains) {
      for (std::size_t d = 0; d < c.size(); ++d) {
        const Eigen::MatrixXd& a = c.states[d];
        for (Eigen::Index t = 0; t < a.cols(); ++t) {
          for (Eigen::Index r = 0; r < a.rows(); ++r) {
            st.row(a(r, t), c.chain, c.iterations[d], static_cast<long>(t), static_cast<long>(r));
          }
        }
      }
    }
    st.close();
  }

  json m;
  m["M"] = draws.m;
  m["K"] = draws.k;
  m["T"] = draws.t;
  m["transition_estimated"] = draws.transition_estimated;
  m["states_stored"] = with_states;
  json chains = json::array();
  for (const auto& c : draws.chains) {
    chains.push_back({{"chain", c.chain},
                      {"seed", c.seed},
                      {"draws", c.size()},
                      {"seconds", c.seconds},
                      {"warnings", c.warnings}});
  }
  m["chains"] = chains;
  m["run"] = run;
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << '\n';
  if (!out) throw IoError(fmt::format("cannot write {}", (dir / "manifest.json").string()));
}

json load_draws_manifest(const std::filesystem::path& dir) {
  try {
    return json::parse(slurp(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("bad draw manifest in {}: {}", dir.string(), e.what()));
  }
}

PosteriorDraws load_draws(const std::filesystem::path& dir) {
  const json m = load_draws_manifest(dir);
  PosteriorDraws draws;
  try {
    draws.m = m.at("M").get<int>();
    draws.k = m.at("K").get<int>();
    draws.t = m.at("T").get<int>();
    draws.transition_estimated = m.at("transition_estimated").get<bool>();
    for (const auto& c : m.at("chains")) {
      ChainDraws cd;
      cd.chain = c.at("chain").get<int>();
      cd.seed = c.at("seed").get<std::uint64_t>();
      cd.seconds = c.at("seconds").get<double>();
      cd.warnings = c.at("warnings").get<std::vector<std::string>>();
      draws.chains.push_back(std::move(cd));
    }
  } catch (const json::exception& e) {
    throw IoError(fmt::format("bad draw manifest in {}: {}", dir.string(), e.what()));
  }
  const bool with_states = m.value("states_stored", false);

  std::map<int, std::size_t> chain_pos;
  for (std::size_t p = 0; p < draws.chains.size(); ++p) chain_pos[draws.chains[p].chain] = p;
  // (chain, iter) -> draw slot, established by tau2.csv.
  std::map<std::pair<long long, long long>, std::size_t> slot;
  auto find = [&](long long chain, long long iter, const char* file) -> std::pair<ChainDraws*, std::size_t> {
    const auto c = chain_pos.find(static_cast<int>(chain));
    const auto s = slot.find({chain, iter});
    if (c == chain_pos.end() || s == slot.end()) {
      throw IoError(fmt::format("{}: unknown chain {} iteration {}", file, chain, iter));
    }
    return {&draws.chains[c->second], s->second};
  };
  auto check = [&](long long v, int n, const char* file) {
    if (v < 0 || v >= n) throw IoError(fmt::format("{}: index {} out of range", file, v));
    return static_cast<int>(v);
  };

  for (const auto& r : read_rows(dir / "tau2.csv", 3)) {
    const auto c = chain_pos.find(static_cast<int>(r.keys[0]));
    if (c == chain_pos.end()) throw IoError(fmt::format("tau2.csv: unknown chain {}", r.keys[0]));
    ChainDraws& cd = draws.chains[c->second];
    auto [it, inserted] = slot.try_emplace({r.keys[0], r.keys[1]}, cd.size());
    if (inserted) {
      cd.iterations.push_back(static_cast<int>(r.keys[1]));
      cd.tau2.push_back(Eigen::VectorXd::Zero(draws.m));
      cd.sigma2.push_back(Eigen::MatrixXd::Zero(draws.t, draws.m));
      if (draws.transition_estimated) cd.transition.emplace_back(draws.m, draws.k);
      if (with_states) cd.states.push_back(Eigen::MatrixXd::Zero(draws.m * draws.k, draws.t + 1));
    }
    cd.tau2[it->second][check(r.keys[2], draws.m, "tau2.csv")] = r.value;
  }
  for (const auto& r : read_rows(dir / "sigma2.csv", 4)) {
    auto [cd, s] = find(r.keys[0], r.keys[1], "sigma2.csv");
    cd->sigma2[s](check(r.keys[2], draws.t, "sigma2.csv"), check(r.keys[3], draws.m, "sigma2.csv")) =
        r.value;
  }
  if (draws.transition_estimated) {
    for (const auto& r : read_rows(dir / "transition.csv", 5)) {
      auto [cd, s] = find(r.keys[0], r.keys[1], "transition.csv");
      cd->transition[s].at(check(r.keys[2], draws.m, "transition.csv"),
                           check(r.keys[3], draws.m, "transition.csv"),
                           check(r.keys[4], draws.k, "transition.csv")) = r.value;
    }
  } else {
    for (auto& cd : draws.chains) {
      cd.transition.assign(cd.size(), TransitionBlocks::identity(draws.m, draws.k));
    }
  }
  if (with_states) {
    for (const auto& r : read_rows(dir / "states.csv", 4)) {
      auto [cd, s] = find(r.keys[0], r.keys[1], "states.csv");
      cd->states[s](check(r.keys[3], draws.m * draws.k, "states.csv"),
                    check(r.keys[2], draws.t + 1, "states.csv")) = r.value;
    }
  }
  return draws;
}

}  // namespace mvstdm
