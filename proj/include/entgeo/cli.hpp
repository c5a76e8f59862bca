#pragma once

// Command-line front end. Every command reads one JSON document (file or
// stdin), writes JSON to stdout or --output, and reports through its exit code:
// 0 success, 1 malformed input, 2 mean value outside the convex support,
// 3 solver budget exhausted or residual above tolerance.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "entgeo/entropy.hpp"
#include "entgeo/expfam.hpp"
#include "entgeo/families.hpp"
#include "entgeo/io.hpp"
#include "entgeo/lattice.hpp"
#include "entgeo/maxent.hpp"
#include "entgeo/verify/suites.hpp"

namespace entgeo::cli {

using io::json;

enum ExitCode : int { kOk = 0, kMalformed = 1, kOutside = 2, kBudget = 3 };

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct RunConfig {
  std::string command;
  std::string input;   // empty: stdin
  std::string output;  // empty: stdout; a directory for figures
  std::uint64_t seed = kDefaultSeed;
  double tol = 1e-9;
  std::optional<int> budget;
  std::vector<std::string> suites;
  std::string family;
  int grid = 64;
};

/// Worker count for batch items: ENTGEO_THREADS if set, else the hardware count.
inline int thread_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ENTGEO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = std::min(n, static_cast<int>(v));
  }
  return n;
}

namespace detail {

/// "(1)⊕(0)" style rank profile.
inline std::string profile_text(const std::vector<int>& r) {
  std::string s;
  for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "⊕(" : "(") + std::to_string(r[i]) + ")";
  return s;
}

inline json face_json(const Projection& p) {
  return json{{"rank_profile", p.rank_profile()}, {"rank", p.rank()}, {"text", profile_text(p.rank_profile())}};
}

inline json outside_json(const std::string& command, const OutsideConvexSupport& e) {
  json j = io::envelope(command);
  j["status"] = "outside";
  j["message"] = e.what();
  j["certificate"] = json{{"coefficients", io::to_json(e.certificate().coefficients)},
                          {"direction", io::to_json(e.certificate().direction)},
                          {"violation", e.certificate().violation}};
  return j;
}

inline json error_json(const std::string& command, const std::string& status, const std::string& message) {
  json j = io::envelope(command);
  j["status"] = status;
  j["message"] = message;
  return j;
}

/// Result of one unit of work: a JSON document and the exit code it implies.
struct Item {
  json doc;
  int code = kOk;
};

/// Runs f, turning library exceptions into status documents.
template <class F>
Item guarded(const std::string& command, F f) {
  try {
    return f();
  } catch (const OutsideConvexSupport& e) {
    return {outside_json(command, e), kOutside};
  } catch (const SolverBudgetExhausted& e) {
    json j = error_json(command, "budget", e.what());
    j["residual"] = e.residual();
    return {j, kBudget};
  } catch (const io::InputError& e) {
    return {error_json(command, "malformed", e.what()), kMalformed};
  } catch (const DomainError& e) {
    return {error_json(command, "malformed", e.what()), kMalformed};
  } catch (const AlgebraMismatch& e) {
    return {error_json(command, "malformed", e.what()), kMalformed};
  } catch (const Error& e) {
    return {error_json(command, "failed", e.what()), kBudget};
  }
}

/// Maps items over worker threads; results come back in input order.
template <class F>
std::vector<Item> parallel_items(std::size_t n, F f) {
  std::vector<Item> out(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) out[i] = f(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

inline json read_input(const RunConfig& cfg, std::istream& in) {
  if (!cfg.input.empty()) return io::read_json_file(cfg.input);
  if (!cfg.family.empty()) return json{{"family", cfg.family}};
  std::stringstream ss;
  ss << in.rdbuf();
  return io::parse_json_text(ss.str(), "standard input");
}

inline NewtonOptions newton_options(const RunConfig& cfg) {
  NewtonOptions opt;
  if (cfg.budget) opt.max_iter = *cfg.budget;
  return opt;
}

inline int worst(const std::vector<Item>& items) {
  int code = kOk;
  for (const auto& it : items) code = std::max(code, it.code);
  return code;
}

/// States from "rho" (single) or "states" (batch).
inline std::vector<json> state_inputs(const json& j, bool& batch) {
  batch = j.contains("states");
  if (batch) {
    const json& s = j.at("states");
    if (!s.is_array() || s.empty()) throw io::InputError("\"states\" must be a non-empty array");
    return std::vector<json>(s.begin(), s.end());
  }
  return {io::require(j, "rho")};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each returns the documents to write and the exit code.

struct Output {
  std::vector<json> docs;  // one line each
  int code = kOk;
};

inline Output cmd_maxent(const RunConfig& cfg, const json& j) {
  const auto item = detail::guarded("maxent", [&]() -> detail::Item {
    const ExpFamilySpec spec = io::parse_family(j);
    const Eigen::VectorXd xi = io::parse_vector(io::require(j, "xi"), "xi");
    if (static_cast<std::size_t>(xi.size()) != spec.size())
      throw io::InputError("\"xi\" has " + std::to_string(xi.size()) + " entries for " + std::to_string(spec.size()) +
                           " constraints");
    const MaxEntResult r = max_entropy(spec, xi, detail::newton_options(cfg));
    json out = io::envelope("maxent");
    out["entropy"] = r.entropy;
    out["betas"] = io::to_json(r.betas);
    out["face"] = detail::face_json(r.face);
    out["free_energy_face"] = r.free_energy_face;
    out["formula_residual"] = r.formula_residual;
    out["residual"] = r.residual;
    out["iterations"] = r.iterations;
    out["state"] = io::to_json(r.rho.elem());
    const bool ok = r.residual <= cfg.tol;
    out["status"] = ok ? "ok" : "residual";
    return {out, ok ? kOk : kBudget};
  });
  return {{item.doc}, item.code};
}

/// Shared by project and distance.
inline Output projection_command(const RunConfig& cfg, const json& j, const std::string& command, bool full) {
  ExpFamilySpec spec;
  std::vector<json> states;
  bool batch = false;
  {
    const auto setup = detail::guarded(command, [&]() -> detail::Item {
      spec = io::parse_family(j);
      states = detail::state_inputs(j, batch);
      return {};
    });
    if (setup.code != kOk) return {{setup.doc}, setup.code};
  }
  const NewtonOptions opt = detail::newton_options(cfg);
  const State base = gibbs_state(spec.theta0());
  const auto items = detail::parallel_items(states.size(), [&](std::size_t i) {
    detail::Item it = detail::guarded(command, [&]() -> detail::Item {
      const State rho = io::parse_state(states[i], spec.algebra());
      const ProjectionResult pr = rI_projection(spec, rho, opt);
      json out = io::envelope(command);
      out["distance"] = io::to_json(pr.distance);
      out["face"] = detail::face_json(pr.face);
      out["depth"] = pr.access_sequence.size();
      out["residual"] = pr.residual;
      // Kernel of sigma in relative entropies: eigenvalues below this fraction of
      // its largest one. Borderline-singular states may report inf.
      out["kernel_tolerance"] = kKernelTol;
      if (full) {
        out["parameters"] = io::to_json(pr.parameters);
        out["pi"] = io::to_json(pr.pi.elem());
        const PythagorasResult pc = pythagoras_check(spec, rho, base);
        out["pythagoras"] = json{{"sigma", "R(theta0)"},
                                 {"rho_pi", io::to_json(pc.rho_pi)},
                                 {"pi_sigma", io::to_json(pc.pi_sigma)},
                                 {"rho_sigma", io::to_json(pc.rho_sigma)},
                                 {"gap", pc.gap},
                                 {"consistent", pc.consistent}};
      }
      const bool ok = pr.residual <= cfg.tol;
      out["status"] = ok ? "ok" : "residual";
      return {out, ok ? kOk : kBudget};
    });
    if (batch) it.doc["index"] = i;
    return it;
  });
  Output o;
  for (const auto& it : items) o.docs.push_back(it.doc);
  o.code = detail::worst(items);
  return o;
}

inline Output cmd_project(const RunConfig& cfg, const json& j) { return projection_command(cfg, j, "project", true); }
inline Output cmd_distance(const RunConfig& cfg, const json& j) { return projection_command(cfg, j, "distance", false); }

inline Output cmd_lattice(const RunConfig& cfg, const json& j) {
  const auto item = detail::guarded("lattice", [&]() -> detail::Item {
    const ExpFamilySpec spec = io::parse_family(j);
    LatticeBudget budget;
    budget.seed = cfg.seed;
    if (cfg.budget) budget.max_pair_checks = *cfg.budget;
    if (j.contains("budget")) {
      const json& b = j["budget"];
      if (!b.is_object()) throw io::InputError("\"budget\" must be an object");
      if (b.contains("grid")) budget.grid_per_sphere = b["grid"].get<int>();
      if (b.contains("max_depth")) budget.max_depth = b["max_depth"].get<int>();
      if (b.contains("random_samples")) budget.random_samples = b["random_samples"].get<int>();
    }
    const LatticeResult res = enumerate_lattice(spec, budget);
    json nodes = json::array();
    for (const auto& n : res.nodes) {
      json jn = detail::face_json(n.projection);
      jn["depth"] = n.depth();
      jn["exposed"] = n.exposed;
      if (n.projection.rank() > 0) jn["centre_mean"] = io::to_json(entgeo::detail::centre_mean(spec, n.projection));
      json seq = json::array();
      for (const auto& s : n.access_sequence) seq.push_back(s.child.rank_profile());
      jn["access_sequence"] = seq;
      jn["projection"] = io::to_json(n.projection.elem());
      nodes.push_back(std::move(jn));
    }
    json out = io::envelope("lattice");
    out["nodes"] = nodes;
    out["node_count"] = res.nodes.size();
    out["pair_checks_truncated"] = res.pair_checks_truncated;
    out["status"] = "ok";
    return {out, kOk};
  });
  return {{item.doc}, item.code};
}

inline Output cmd_geodesic(const RunConfig&, const json& j) {
  const auto item = detail::guarded("geodesic", [&]() -> detail::Item {
    const AlgebraSpec alg = io::parse_algebra(io::require(j, "blocks"));
    const HermElem theta = io::parse_elem(io::require(j, "theta"), alg);
    const HermElem u = io::parse_elem(io::require(j, "direction"), alg);
    std::vector<double> ts{1.0, 10.0, 100.0, 1000.0};
    if (j.contains("t")) {
      const Eigen::VectorXd t = io::parse_vector(j["t"], "t");
      ts.assign(t.data(), t.data() + t.size());
    }
    const GeodesicLimit lim = e_geodesic_limit(theta, u);
    const double top = max_projection(u).value;
    const double f_face = free_energy(lim.compression.apply(theta));
    json samples = json::array();
    for (double t : ts) {
      const HermElem th = theta + t * u;
      samples.push_back(json{{"t", t},
                             {"trace_distance", trace_distance(gibbs_state(th).elem(), lim.state.elem())},
                             {"free_energy_gap", free_energy(th) - t * top - f_face}});
    }
    json out = io::envelope("geodesic");
    out["face"] = detail::face_json(lim.compression.projection());
    out["limit"] = io::to_json(lim.state.elem());
    out["lambda_max"] = top;
    out["free_energy_face"] = f_face;
    out["large_t"] = large_t(theta, u);
    out["samples"] = samples;
    out["status"] = "ok";
    return {out, kOk};
  });
  return {{item.doc}, item.code};
}

// ---------------------------------------------------------------------------
// Figures

namespace detail {

inline HermElem planar_direction(const ExpFamilySpec& spec, double phi) {
  return std::cos(phi) * spec.direction(0) + std::sin(phi) * spec.direction(1);
}

inline std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw io::InputError("cannot write " + p.string());
  return f;
}

}  // namespace detail

/// Surface: a grid x grid sample of R(theta0 + l1 u1 + l2 u2) over [-4, 4]^2.
/// Boundary: support function sweep h(phi) = lambda_max(cos phi u1 + sin phi u2)
/// with the mean value of the normalized maximal projection. Closure: limits of
/// e-geodesics R(b u_perp + t u_phi). Segment (Staffelberg): the extra norm
/// closure points w q + (1 - w) over (0, 1), their entropy distance and the error
/// of the approximating family members at two values of t.
inline Output cmd_figures(const RunConfig& cfg, const json& j) {
  const auto item = detail::guarded("figures", [&]() -> detail::Item {
    const ExpFamilySpec spec = io::parse_family(j);
    if (spec.size() != 2) throw io::InputError("figures needs a family with two directions");
    if (cfg.grid < 2) throw io::InputError("--grid must be at least 2");
    const std::string name = j.contains("family") ? j["family"].get<std::string>() : "custom";
    const std::filesystem::path dir = cfg.output.empty() ? std::filesystem::path("figures") : std::filesystem::path(cfg.output);
    std::filesystem::create_directories(dir);
    const int g = cfg.grid;
    json files = json::object();

    {
      auto f = detail::open_csv(dir / "surface.csv");
      io::CsvWriter w(f, {"lambda1", "lambda2", "x1", "x2", "entropy"});
      const double range = 4.0;
      for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) {
          Eigen::VectorXd lam(2);
          lam << range * (2.0 * a / (g - 1) - 1.0), range * (2.0 * b / (g - 1) - 1.0);
          const State s = gibbs_state(spec.parameter(lam));
          const Eigen::VectorXd x = mean_value(s, spec);
          w.row({lam(0), lam(1), x(0), x(1), von_neumann_entropy(s)});
        }
      files["surface.csv"] = w.rows();
    }
    {
      auto f = detail::open_csv(dir / "boundary.csv");
      io::CsvWriter w(f, {"phi", "h", "x1", "x2", "rank"});
      for (int k = 0; k < g; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / g;
        const MaxProjection mp = max_projection(detail::planar_direction(spec, phi));
        const Eigen::VectorXd x = entgeo::detail::centre_mean(spec, mp.projection);
        w.row({phi, mp.value, x(0), x(1), static_cast<double>(mp.projection.rank())});
      }
      files["boundary.csv"] = w.rows();
    }
    {
      auto f = detail::open_csv(dir / "closure.csv");
      io::CsvWriter w(f, {"phi", "b", "x1", "x2", "rank"});
      for (int k = 0; k < g; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / g;
        const HermElem u = detail::planar_direction(spec, phi);
        const HermElem perp = detail::planar_direction(spec, phi + 0.5 * std::numbers::pi);
        for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
          const GeodesicLimit lim = e_geodesic_limit(spec.theta0() + b * perp, u);
          const Eigen::VectorXd x = mean_value(lim.state, spec);
          w.row({phi, b, x(0), x(1), static_cast<double>(lim.compression.projection().rank())});
        }
      }
      files["closure.csv"] = w.rows();
    }
    if (name == "staffelberg") {
      auto f = detail::open_csv(dir / "segment.csv");
      io::CsvWriter w(f, {"w", "x1", "x2", "distance", "closed_form", "error_t1e4", "error_t1e8"});
      const Eigen::MatrixXcd q = 0.5 * (pauli::one() + pauli::y());
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (int k = 0; k <= g; ++k) {
        const double wt = 0.5 + 0.5 * k / g;
        const State s(families::qubit_plus(wt * q, 1.0 - wt));
        const Eigen::VectorXd x = mean_value(s, spec);
        const double h = wt < 1.0 ? -wt * std::log(wt) - (1.0 - wt) * std::log(1.0 - wt) : 0.0;
        double err[2] = {nan, nan};
        if (wt < 1.0) {
          const double c = std::log(wt / (1.0 - wt));
          int i = 0;
          for (double t : {1e4, 1e8}) {
            Eigen::VectorXd lam(2);
            lam << std::sqrt(2.0 * t * c), t;
            err[i++] = trace_distance(gibbs_state(spec.parameter(lam)).elem(), s.elem());
          }
        }
        w.row({wt, x(0), x(1), entropy_distance(spec, s).as_double(), std::log(2.0) - h, err[0], err[1]});
      }
      files["segment.csv"] = w.rows();
    }
    json out = io::envelope("figures");
    out["family"] = name;
    out["grid"] = g;
    out["directory"] = dir.string();
    out["rows"] = files;
    out["status"] = "ok";
    return {out, kOk};
  });
  return {{item.doc}, item.code};
}

// ---------------------------------------------------------------------------
// Verify

/// Suites selected by name or number; all of them when the list is empty.
inline std::vector<verify::Suite> select_suites(const std::vector<std::string>& names) {
  const auto& all = verify::all_suites();
  if (names.empty()) return all;
  std::vector<verify::Suite> out;
  for (const auto& n : names) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const verify::Suite& s) { return s.name == n || std::to_string(s.id) == n; });
    if (it == all.end()) throw io::InputError("unknown suite '" + n + "'");
    if (std::none_of(out.begin(), out.end(), [&](const verify::Suite& s) { return s.id == it->id; })) out.push_back(*it);
  }
  return out;
}

inline Output cmd_verify(const RunConfig& cfg, const json* config, std::ostream& log) {
  std::vector<std::string> names = cfg.suites;
  std::uint64_t seed = cfg.seed;
  std::vector<verify::Suite> suites;
  const auto setup = detail::guarded("verify", [&]() -> detail::Item {
    if (config) {
      if (!config->is_object()) throw io::InputError("verify config must be a JSON object");
      if (config->contains("seed")) {
        if (!(*config)["seed"].is_number_unsigned()) throw io::InputError("\"seed\" must be a non-negative integer");
        seed = (*config)["seed"].get<std::uint64_t>();
      }
      if (config->contains("suites")) {
        if (!(*config)["suites"].is_array()) throw io::InputError("\"suites\" must be an array of names");
        for (const auto& s : (*config)["suites"]) {
          if (!s.is_string()) throw io::InputError("\"suites\" must be an array of names");
          names.push_back(s.get<std::string>());
        }
      }
    }
    suites = select_suites(names);
    return {};
  });
  if (setup.code != kOk) return {{setup.doc}, setup.code};

  json results = json::array();
  bool all_pass = true;
  for (const auto& s : suites) {
    const verify::SuiteResult r = verify::run_suite(s, seed);
    all_pass &= r.passed;
    log << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << ": " << r.detail << '\n';
    results.push_back(json{{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  json out = io::envelope("verify");
  out["seed"] = seed;
  out["suites"] = results;
  out["passed"] = all_pass;
  out["status"] = all_pass ? "ok" : "failed";
  return {{out}, all_pass ? kOk : kBudget};
}

// ---------------------------------------------------------------------------
// Entry point

inline void write_docs(const std::vector<json>& docs, std::ostream& os) {
  for (const auto& d : docs) {
    io::write_json(os, d);
    os << '\n';
  }
}

/// Parses arguments and runs one command. Output documents go to out (or the
/// --output file), human-readable messages to err.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::istream& in = std::cin) {
  CLI::App app{"Entropy geometry of exponential families: maximum entropy, rI-projections, face lattices"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string suite_list;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-i,--input", cfg.input, "input JSON file (default: standard input)");
    sub->add_option("-o,--output", cfg.output, "output file");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--tol", cfg.tol, "residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--budget", cfg.budget, "iteration budget")->check(CLI::PositiveNumber);
    sub->add_option("--family", cfg.family, "named family: staffelberg, swallow, triangle, independence");
  };
  const std::vector<std::pair<std::string, std::string>> commands{
      {"maxent", "maximum entropy state for mean values xi"},
      {"project", "rI-projection of states onto the closure of a family"},
      {"distance", "entropy distance of states from a family"},
      {"lattice", "face lattice of the convex support, with access sequences"},
      {"geodesic", "limit of an e-geodesic R(theta + t u)"},
      {"figures", "CSV data for the mean value set pictures"},
      {"verify", "run the verification suites"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    if (name == "figures") sub->add_option("--grid", cfg.grid, "grid size")->check(CLI::PositiveNumber);
    if (name == "verify") sub->add_option("--suite", suite_list, "comma separated suite names or numbers");
    sub->callback([&cfg, name = name] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kMalformed;
  }
  if (!suite_list.empty()) {
    std::stringstream ss(suite_list);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) cfg.suites.push_back(tok);
  }

  Output o;
  std::ostringstream log;
  try {
    if (cfg.command == "verify") {
      std::optional<json> config;
      if (!cfg.input.empty()) config = io::read_json_file(cfg.input);
      o = cmd_verify(cfg, config ? &*config : nullptr, log);
    } else {
      const json j = detail::read_input(cfg, in);
      if (cfg.command == "maxent") o = cmd_maxent(cfg, j);
      else if (cfg.command == "project") o = cmd_project(cfg, j);
      else if (cfg.command == "distance") o = cmd_distance(cfg, j);
      else if (cfg.command == "lattice") o = cmd_lattice(cfg, j);
      else if (cfg.command == "geodesic") o = cmd_geodesic(cfg, j);
      else if (cfg.command == "figures") o = cmd_figures(cfg, j);
    }
  } catch (const io::InputError& e) {
    err << "entgeo: " << e.what() << '\n';
    return kMalformed;
  }
  err << log.str();

  if (!cfg.output.empty() && cfg.command != "figures") {
    std::ofstream f(cfg.output);
    if (!f) {
      err << "entgeo: cannot write " << cfg.output << '\n';
      return kMalformed;
    }
    write_docs(o.docs, f);
  } else {
    write_docs(o.docs, out);
  }
  for (const auto& d : o.docs)
    if (d.contains("message")) err << "entgeo: " << d["message"].get<std::string>() << '\n';
  return o.code;
}

}  // namespace entgeo::cli
