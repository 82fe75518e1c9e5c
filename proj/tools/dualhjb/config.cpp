#include "config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include <dualhjb/errors.hpp>
#include <dualhjb/grid.hpp>

namespace dualhjb::app {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& path, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError((path.empty() ? key : path + "." + key) + ": unknown key");
    }
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + " must be a number");
  return j.get<double>();
}

double opt_number(const json& obj, const std::string& path, const std::string& key, double def) {
  if (!obj.contains(key)) return def;
  return get_number(obj.at(key), join(path, key));
}

std::uint64_t opt_count(const json& obj, const std::string& path, const std::string& key,
                        std::uint64_t def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(join(path, key) + " must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

bool opt_bool(const json& obj, const std::string& path, const std::string& key, bool def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_boolean()) throw ConfigError(join(path, key) + " must be a boolean");
  return obj.at(key).get<bool>();
}

std::vector<double> get_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Eigen::VectorXd get_eigen_vector(const json& j, const std::string& path) {
  const auto v = get_vector(j, path);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Rows of a matrix given as an array of arrays.
Eigen::MatrixXd get_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = get_vector(j[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    }
    if (row.size() != cols) throw ConfigError(path + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

// Columns are the listed vectors.
Eigen::MatrixXd get_columns(const json& j, const std::string& path, int n) {
  if (!j.is_array()) throw ConfigError(path + " must be an array of vectors");
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    const auto v = get_eigen_vector(j[c], path + "[" + std::to_string(c) + "]");
    if (v.size() != n) throw ConfigError(path + "[" + std::to_string(c) + "] has wrong dimension");
    m.col(static_cast<Eigen::Index>(c)) = v;
  }
  return m;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::VectorXd row = m.row(r).transpose();
    rows.push_back(vec_json(row));
  }
  return rows;
}

ConeSpec parse_cone(const json& j, int n, json& canon) {
  const std::string path = "market.cone";
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  reject_unknown(j, path, {"kind", "generators", "normals"});
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(path + ".kind must be a string");
  const auto kind = j.at("kind").get<std::string>();
  canon = {{"kind", kind}};
  if (kind == "whole_space") return ConeSpec::whole_space(n);
  if (kind == "nonneg_orthant") return ConeSpec::nonneg_orthant(n);
  if (kind == "generated_by") {
    if (!j.contains("generators")) throw ConfigError(path + ".generators is required");
    auto g = get_columns(j.at("generators"), path + ".generators", n);
    canon["generators"] = mat_json(g.transpose());
    return ConeSpec::generated_by(g);
  }
  if (kind == "polyhedral") {
    if (!j.contains("normals")) throw ConfigError(path + ".normals is required");
    auto m = get_columns(j.at("normals"), path + ".normals", n);
    canon["normals"] = mat_json(m.transpose());
    return ConeSpec::polyhedral(m);
  }
  throw ConfigError(path + ".kind must be one of whole_space, nonneg_orthant, generated_by, polyhedral");
}

MarketParams parse_market(const json& j, json& canon) {
  const std::string path = "market";
  reject_unknown(j, path, {"n", "T", "grid", "b", "sigma", "cone", "theta_floor"});
  if (!j.contains("b") || !j.contains("sigma")) throw ConfigError("market.b and market.sigma are required");
  const double floor = opt_number(j, path, "theta_floor", 1e-3);
  std::vector<double> grid;
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> sigma;
  if (j.contains("grid")) {
    if (j.contains("T")) throw ConfigError("market: give either T or grid, not both");
    grid = get_vector(j.at("grid"), "market.grid");
    const auto& jb = j.at("b");
    const auto& js = j.at("sigma");
    if (!jb.is_array() || !js.is_array()) throw ConfigError("market.b and market.sigma must be arrays");
    for (std::size_t k = 0; k < jb.size(); ++k) b.push_back(get_eigen_vector(jb[k], "market.b[" + std::to_string(k) + "]"));
    for (std::size_t k = 0; k < js.size(); ++k) sigma.push_back(get_matrix(js[k], "market.sigma[" + std::to_string(k) + "]"));
  } else {
    if (!j.contains("T")) throw ConfigError("market.T is required when market.grid is absent");
    const double T = get_number(j.at("T"), "market.T");
    if (!(T > 0.0)) throw ConfigError("market.T must be positive");
    grid = {0.0, T};
    b.push_back(get_eigen_vector(j.at("b"), "market.b"));
    sigma.push_back(get_matrix(j.at("sigma"), "market.sigma"));
  }
  const int n = b.empty() ? 0 : static_cast<int>(b.front().size());
  if (n == 0) throw ConfigError("market.b must be nonempty");
  if (j.contains("n") && opt_count(j, path, "n", 0) != static_cast<std::uint64_t>(n)) {
    throw ConfigError("market.n does not match the length of market.b");
  }
  json cone_canon;
  ConeSpec cone = j.contains("cone") ? parse_cone(j.at("cone"), n, cone_canon) : ConeSpec::whole_space(n);
  if (!j.contains("cone")) cone_canon = {{"kind", "whole_space"}};
  MarketParams mp(grid, b, sigma, cone, floor);

  canon = json::object();
  canon["grid"] = grid;
  json cb = json::array(), cs = json::array();
  for (const auto& v : b) cb.push_back(vec_json(v));
  for (const auto& m : sigma) cs.push_back(mat_json(m));
  canon["b"] = cb;
  canon["sigma"] = cs;
  canon["cone"] = cone_canon;
  canon["theta_floor"] = floor;
  return mp;
}

UtilityFunction parse_utility(const json& j, json& canon) {
  const std::string path = "utility";
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw ConfigError("utility.family must be a string");
  }
  const auto family = j.at("family").get<std::string>();
  canon = j;
  try {
    if (family == "power") {
      reject_unknown(j, path, {"family", "p", "scale"});
      if (!j.contains("p")) throw ConfigError("utility.p is required");
      return UtilityFunction::power(get_number(j.at("p"), "utility.p"), opt_number(j, path, "scale", 1.0));
    }
    std::optional<GrowthCertificate> growth;
    if (j.contains("growth")) {
      const auto& g = j.at("growth");
      reject_unknown(g, "utility.growth", {"L", "p"});
      if (!g.contains("L") || !g.contains("p")) throw ConfigError("utility.growth needs L and p");
      growth = GrowthCertificate{get_number(g.at("L"), "utility.growth.L"), get_number(g.at("p"), "utility.growth.p")};
    }
    if (family == "min_of_pieces") {
      reject_unknown(j, path, {"family", "branches", "crossovers", "growth"});
      if (!j.contains("branches") || !j.at("branches").is_array()) throw ConfigError("utility.branches must be an array");
      std::vector<PowerBranch> br;
      for (std::size_t i = 0; i < j.at("branches").size(); ++i) {
        const auto& e = j.at("branches")[i];
        const std::string bp = "utility.branches[" + std::to_string(i) + "]";
        reject_unknown(e, bp, {"offset", "scale", "exponent"});
        br.push_back({opt_number(e, bp, "offset", 0.0), opt_number(e, bp, "scale", 1.0),
                      opt_number(e, bp, "exponent", 1.0)});
      }
      std::optional<std::vector<double>> cross;
      if (j.contains("crossovers")) cross = get_vector(j.at("crossovers"), "utility.crossovers");
      return UtilityFunction::min_of_pieces(br, cross, growth);
    }
    if (family == "tabulated") {
      reject_unknown(j, path, {"family", "x", "u", "tail_exponent", "growth"});
      if (!j.contains("x") || !j.contains("u")) throw ConfigError("utility.x and utility.u are required");
      return UtilityFunction::tabulated(get_vector(j.at("x"), "utility.x"), get_vector(j.at("u"), "utility.u"),
                                        opt_number(j, path, "tail_exponent", 0.5), growth);
    }
    if (family == "sum_of_powers") {
      reject_unknown(j, path, {"family", "terms", "growth"});
      if (!j.contains("terms") || !j.at("terms").is_array()) throw ConfigError("utility.terms must be an array");
      std::vector<PowerTerm> terms;
      for (std::size_t i = 0; i < j.at("terms").size(); ++i) {
        const auto& e = j.at("terms")[i];
        const std::string tp = "utility.terms[" + std::to_string(i) + "]";
        reject_unknown(e, tp, {"scale", "exponent"});
        if (!e.contains("exponent")) throw ConfigError(tp + ".exponent is required");
        terms.push_back({opt_number(e, tp, "scale", 1.0), get_number(e.at("exponent"), tp + ".exponent")});
      }
      return UtilityFunction::sum_of_powers(terms, growth);
    }
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("utility", 0) == 0) throw;
    throw ConfigError("utility: " + msg);
  }
  throw ConfigError("utility.family must be one of power, min_of_pieces, tabulated, sum_of_powers");
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte after the offending token.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError("syntax error at " + line_column(text, at) + ": " + e.what());
  }
  reject_unknown(j, "", {"seed", "x0", "market", "utility", "quadrature", "simulation", "application", "output"});
  if (!j.contains("market")) throw ConfigError("market block is required");
  if (!j.contains("utility")) throw ConfigError("utility block is required");

  ScenarioConfig cfg;
  json canon = json::object();
  cfg.seed = opt_count(j, "", "seed", cfg.seed);
  cfg.x0 = opt_number(j, "", "x0", cfg.x0);
  if (!(cfg.x0 > 0.0)) throw ConfigError("x0 must be positive");

  json mc, uc;
  cfg.market = parse_market(j.at("market"), mc);
  cfg.utility = parse_utility(j.at("utility"), uc);
  {
    const auto rep = validate_assumption1(cfg.utility);
    for (const auto& c : rep.checks()) {
      if (!c.passed) throw ConfigError("utility fails " + c.name + ": " + c.detail);
    }
  }

  if (j.contains("quadrature")) {
    const auto& q = j.at("quadrature");
    reject_unknown(q, "quadrature", {"half_width", "nodes", "derivative_scheme"});
    cfg.quadrature.half_width = opt_number(q, "quadrature", "half_width", cfg.quadrature.half_width);
    cfg.quadrature.nodes = static_cast<int>(opt_count(q, "quadrature", "nodes", static_cast<std::uint64_t>(cfg.quadrature.nodes)));
    if (q.contains("derivative_scheme")) {
      if (!q.at("derivative_scheme").is_string()) throw ConfigError("quadrature.derivative_scheme must be a string");
      cfg.quadrature.derivative_scheme = q.at("derivative_scheme").get<std::string>();
    }
  }
  try {
    cfg.quadrature.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("quadrature: ") + e.what());
  }

  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    const std::string sp = "simulation";
    reject_unknown(s, sp, {"paths", "steps_per_year", "scheme", "antithetic", "time_grading", "workers", "table_nodes", "table_log_half_width", "table_quadrature_nodes"});
    cfg.simulation.paths = opt_count(s, sp, "paths", cfg.simulation.paths);
    cfg.simulation.steps_per_year = opt_count(s, sp, "steps_per_year", cfg.simulation.steps_per_year);
    if (s.contains("scheme")) {
      if (!s.at("scheme").is_string()) throw ConfigError("simulation.scheme must be a string");
      cfg.simulation.scheme = s.at("scheme").get<std::string>();
    }
    cfg.simulation.antithetic = opt_bool(s, sp, "antithetic", cfg.simulation.antithetic);
    cfg.simulation.time_grading = opt_number(s, sp, "time_grading", cfg.simulation.time_grading);
    cfg.simulation.workers = static_cast<unsigned>(opt_count(s, sp, "workers", cfg.simulation.workers));
    cfg.control_table.nodes = opt_count(s, sp, "table_nodes", cfg.control_table.nodes);
    cfg.control_table.log_half_width = opt_number(s, sp, "table_log_half_width", cfg.control_table.log_half_width);
    cfg.control_table.quadrature_nodes = static_cast<int>(opt_count(s, sp, "table_quadrature_nodes", static_cast<std::uint64_t>(cfg.control_table.quadrature_nodes)));
  }
  cfg.simulation.seed = cfg.seed;
  cfg.simulation.validate();
  if (cfg.control_table.nodes < 3) throw ConfigError("simulation.table_nodes must be >= 3");

  if (j.contains("application")) {
    const auto& a = j.at("application");
    reject_unknown(a, "application", {"cvar", "risk"});
    if (a.contains("cvar")) {
      const auto& c = a.at("cvar");
      reject_unknown(c, "application.cvar", {"beta", "lambdas"});
      cfg.cvar.beta = opt_number(c, "application.cvar", "beta", cfg.cvar.beta);
      if (c.contains("lambdas")) cfg.cvar.lambdas = get_vector(c.at("lambdas"), "application.cvar.lambdas");
    }
    if (a.contains("risk")) {
      const auto& r = a.at("risk");
      reject_unknown(r, "application.risk", {"t", "x"});
      if (r.contains("t")) cfg.risk.t = get_vector(r.at("t"), "application.risk.t");
      if (r.contains("x")) cfg.risk.x = get_vector(r.at("x"), "application.risk.x");
    }
  }
  CvarSpec{cfg.cvar.beta, 0.0, cfg.x0}.validate();
  for (std::size_t i = 0; i < cfg.cvar.lambdas.size(); ++i) {
    if (!(cfg.cvar.lambdas[i] >= 0.0)) throw ConfigError("application.cvar.lambdas[" + std::to_string(i) + "] must be >= 0");
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    reject_unknown(o, "output", {"dir", "t_grid", "x_grid", "y_grid", "write_paths", "eps_tail"});
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) throw ConfigError("output.dir must be a string");
      cfg.output.dir = o.at("dir").get<std::string>();
    }
    if (o.contains("t_grid")) cfg.output.t_grid = get_vector(o.at("t_grid"), "output.t_grid");
    if (o.contains("x_grid")) cfg.output.x_grid = get_vector(o.at("x_grid"), "output.x_grid");
    if (o.contains("y_grid")) cfg.output.y_grid = get_vector(o.at("y_grid"), "output.y_grid");
    cfg.output.write_paths = opt_bool(o, "output", "write_paths", cfg.output.write_paths);
    cfg.output.eps_tail = opt_number(o, "output", "eps_tail", cfg.output.eps_tail);
    if (!(cfg.output.eps_tail > 0.0)) throw ConfigError("output.eps_tail must be positive");
  }
  if (cfg.output.x_grid.empty()) cfg.output.x_grid = logspace(0.05, 20.0, 24);
  if (cfg.output.y_grid.empty()) cfg.output.y_grid = logspace(0.01, 100.0, 24);
  if (cfg.risk.x.empty()) cfg.risk.x = cfg.output.x_grid;
  const double T = cfg.market.horizon();
  auto check_grid = [&](const std::vector<double>& g, const std::string& name, bool open_t, bool positive) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string at = name + "[" + std::to_string(i) + "]";
      if (open_t && !(g[i] >= 0.0 && g[i] < T)) throw ConfigError(at + " must lie in [0, T)");
      if (positive && !(g[i] > 0.0)) throw ConfigError(at + " must be positive");
    }
  };
  check_grid(cfg.output.t_grid, "output.t_grid", true, false);
  check_grid(cfg.output.x_grid, "output.x_grid", false, true);
  check_grid(cfg.output.y_grid, "output.y_grid", false, true);
  check_grid(cfg.risk.t, "application.risk.t", true, false);
  check_grid(cfg.risk.x, "application.risk.x", false, true);

  // Output directory and worker count do not affect results, so they stay out.
  canon["seed"] = cfg.seed;
  canon["x0"] = cfg.x0;
  canon["market"] = mc;
  canon["utility"] = uc;
  canon["quadrature"] = {{"half_width", cfg.quadrature.half_width},
                         {"nodes", cfg.quadrature.nodes},
                         {"derivative_scheme", cfg.quadrature.derivative_scheme}};
  canon["simulation"] = {{"paths", cfg.simulation.paths},
                         {"steps_per_year", cfg.simulation.steps_per_year},
                         {"scheme", cfg.simulation.scheme},
                         {"antithetic", cfg.simulation.antithetic},
                         {"time_grading", cfg.simulation.time_grading},
                         {"table_nodes", cfg.control_table.nodes},
                         {"table_log_half_width", cfg.control_table.log_half_width},
                         {"table_quadrature_nodes", cfg.control_table.quadrature_nodes}};
  canon["application"] = {{"cvar", {{"beta", cfg.cvar.beta}, {"lambdas", cfg.cvar.lambdas}}},
                          {"risk", {{"t", cfg.risk.t}, {"x", cfg.risk.x}}}};
  canon["output"] = {{"t_grid", cfg.output.t_grid},
                     {"x_grid", cfg.output.x_grid},
                     {"y_grid", cfg.output.y_grid},
                     {"write_paths", cfg.output.write_paths},
                     {"eps_tail", cfg.output.eps_tail}};
  cfg.canonical = canon.dump();
  return cfg;
}

ScenarioConfig merton_scenario() {
  return parse_config(R"({
    "market": {"T": 1.0, "b": [0.2], "sigma": [[0.4]], "cone": {"kind": "whole_space"}},
    "utility": {"family": "power", "p": 0.5}
  })");
}

}  // namespace dualhjb::app
