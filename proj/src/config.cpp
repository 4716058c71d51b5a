#include "hcmpc/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hcmpc {

namespace {

class Reader {
public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const int line = at.IsDefined() && at.Mark().line >= 0 ? at.Mark().line + 1 : 1;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  void keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, section + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  template <class T>
  T get(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value for " + what);
    }
  }

  template <class T>
  void maybe(const YAML::Node& parent, const std::string& key, T& out, const std::string& section) const {
    if (const auto n = parent[key]) out = get<T>(n, section + "." + key);
  }

  Vector vector(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Eigen::Index>(i)) = get<double>(node[i], what);
    return v;
  }

  template <class E>
  E choice(const YAML::Node& node, const std::string& what, const std::map<std::string, E>& options) const {
    const auto s = get<std::string>(node, what);
    const auto it = options.find(s);
    if (it == options.end()) {
      std::string list;
      for (const auto& [k, v] : options) list += (list.empty() ? "" : ", ") + k;
      fail(node, "invalid value '" + s + "' for " + what + " (expected one of: " + list + ")");
    }
    return it->second;
  }

private:
  std::string source_;
};

void read_horizons(const Reader& rd, const YAML::Node& node, std::vector<HorizonPair>& pairs) {
  rd.keys(node, "horizons", {"pairs", "sweep"});
  pairs.clear();
  if (const auto list = node["pairs"]) {
    if (!list.IsSequence()) rd.fail(list, "horizons.pairs must be a list of [N, Ntilde]");
    for (const auto& item : list) {
      if (!item.IsSequence() || item.size() != 2) rd.fail(item, "horizon pair must be [N, Ntilde]");
      pairs.push_back({rd.get<int>(item[0], "N"), rd.get<int>(item[1], "Ntilde")});
    }
  }
  if (const auto list = node["sweep"]) {
    if (!list.IsSequence()) rd.fail(list, "horizons.sweep must be a list");
    for (const auto& item : list) {
      rd.keys(item, "horizons.sweep entry", {"N", "Ntilde"});
      if (!item["N"]) rd.fail(item, "sweep entry needs N");
      const int N = rd.get<int>(item["N"], "N");
      int lo = 2, hi = N;
      if (const auto nt = item["Ntilde"]) {
        if (nt.IsScalar()) {
          if (rd.get<std::string>(nt, "Ntilde") != "all") rd.fail(nt, "Ntilde must be 'all' or [min, max]");
        } else if (nt.IsSequence() && nt.size() == 2) {
          lo = rd.get<int>(nt[0], "Ntilde");
          hi = rd.get<int>(nt[1], "Ntilde");
        } else {
          rd.fail(nt, "Ntilde must be 'all' or [min, max]");
        }
      }
      for (int nt = lo; nt <= hi; ++nt) pairs.push_back({N, nt});
    }
  }
  if (pairs.empty()) rd.fail(node, "horizons: empty sweep list");
  for (const auto& p : pairs) {
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      rd.fail(node, std::string("horizons: ") + e.what());
    }
  }
}

void read_solver(const Reader& rd, const YAML::Node& node, SolverOptions& s) {
  rd.keys(node, "solver",
          {"kkt_tolerance", "max_outer_iterations", "backtracking_factor", "sufficient_decrease", "hessian",
           "constraint_violation_tolerance", "elastic_penalty", "newton_polish_threshold"});
  rd.maybe(node, "kkt_tolerance", s.kkt_tolerance, "solver");
  rd.maybe(node, "max_outer_iterations", s.max_outer_iterations, "solver");
  rd.maybe(node, "backtracking_factor", s.backtracking_factor, "solver");
  rd.maybe(node, "sufficient_decrease", s.sufficient_decrease, "solver");
  rd.maybe(node, "constraint_violation_tolerance", s.constraint_violation_tolerance, "solver");
  rd.maybe(node, "elastic_penalty", s.elastic_penalty, "solver");
  rd.maybe(node, "newton_polish_threshold", s.newton_polish_threshold, "solver");
  if (const auto h = node["hessian"])
    s.hessian_mode = rd.choice<HessianMode>(
        h, "solver.hessian",
        {{"gauss_newton", HessianMode::GaussNewton}, {"exact_for_quadratic", HessianMode::ExactForQuadratic}});
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    rd.fail(node, e.what());
  }
}

void read_bounds(const Reader& rd, const YAML::Node& node, AnalysisOptions& a) {
  rd.keys(node, "bounds", {"provenance", "delta", "nu", "baseline_lcss", "check_tail", "negligible_lambda"});
  if (const auto n = node["provenance"])
    a.provenance = rd.choice<Provenance>(n, "bounds.provenance",
                                         {{"x0", Provenance::X0Only}, {"trajectory", Provenance::FullTrajectory}});
  if (const auto n = node["delta"])
    a.delta_method =
        rd.choice<DeltaMethod>(n, "bounds.delta", {{"heuristic", DeltaMethod::Heuristic}, {"prop4", DeltaMethod::Prop4}});
  if (const auto n = node["nu"])
    a.nu_method = rd.choice<NuMethod>(n, "bounds.nu", {{"heuristic", NuMethod::Heuristic}, {"prop7", NuMethod::Prop7}});
  rd.maybe(node, "baseline_lcss", a.baseline_lcss, "bounds");
  rd.maybe(node, "check_tail", a.check_tail, "bounds");
  rd.maybe(node, "negligible_lambda", a.negligible_lambda, "bounds");
}

void read_oracle(const Reader& rd, const YAML::Node& node, OracleSettings& o) {
  rd.keys(node, "oracle",
          {"state_nodes", "input_nodes", "interpolation", "state_range", "samples", "sample_range", "max_N",
           "tolerance"});
  rd.maybe(node, "state_nodes", o.state_nodes, "oracle");
  rd.maybe(node, "input_nodes", o.input_nodes, "oracle");
  rd.maybe(node, "state_range", o.state_range, "oracle");
  rd.maybe(node, "samples", o.samples, "oracle");
  rd.maybe(node, "sample_range", o.sample_range, "oracle");
  rd.maybe(node, "max_N", o.max_N, "oracle");
  rd.maybe(node, "tolerance", o.tolerance, "oracle");
  if (const auto n = node["interpolation"])
    o.interpolation = rd.choice<Interpolation>(
        n, "oracle.interpolation", {{"nearest", Interpolation::Nearest}, {"multilinear", Interpolation::Multilinear}});
  if (o.state_nodes < 3 || o.input_nodes < 3) rd.fail(node, "oracle: resolutions must be at least 3");
  if (o.samples < 1 || o.max_N < 1) rd.fail(node, "oracle: samples and max_N must be positive");
  if (!(o.state_range > 0.0) || !(o.sample_range >= 0.0) || !(o.tolerance > 0.0))
    rd.fail(node, "oracle: ranges and tolerance must be positive");
}

}  // namespace

LoadedConfig parse_config(const std::string& text, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ":1: configuration must be a mapping");
  rd.keys(root, "configuration",
          {"scenario", "model", "horizons", "x0", "closed_loop", "solver", "bounds", "oracle", "output"});

  std::string preset;
  Overrides overrides;
  const auto model = root["model"];
  if (model) {
    rd.keys(model, "model", {"id", "overrides"});
    if (const auto o = model["overrides"]) {
      if (!o.IsMap()) rd.fail(o, "model.overrides must be a mapping");
      for (const auto& kv : o) overrides[kv.first.as<std::string>()] = rd.get<double>(kv.second, "model override");
    }
  }
  if (const auto s = root["scenario"]) preset = rd.get<std::string>(s, "scenario");
  else if (model && model["id"]) preset = rd.get<std::string>(model["id"], "model.id");
  else rd.fail(root, "either 'scenario' or 'model.id' is required");

  LoadedConfig out;
  ScenarioConfig& c = out.scenario;
  try {
    c = scenario_preset(preset, overrides);
  } catch (const InvalidArgument& e) {
    rd.fail(root["scenario"] ? root["scenario"] : model["id"], e.what());
  }
  if (model && model["id"]) {
    const auto id = rd.get<std::string>(model["id"], "model.id");
    if (id != c.model_id) rd.fail(model["id"], "model.id '" + id + "' does not match scenario model '" + c.model_id + "'");
  }
  std::shared_ptr<const ModelSpec> spec;
  try {
    spec = c.model();
  } catch (const InvalidArgument& e) {
    rd.fail(model ? model : root, e.what());
  }

  if (const auto h = root["horizons"]) read_horizons(rd, h, c.pairs);
  if (const auto x = root["x0"]) c.x0 = rd.vector(x, "x0");
  const auto x_anchor = root["x0"] ? root["x0"] : root["scenario"] ? root["scenario"] : root;
  if (c.x0.size() != spec->state_dim)
    rd.fail(x_anchor, "x0 has " + std::to_string(c.x0.size()) + " entries, model expects " +
                          std::to_string(spec->state_dim));
  if (!in_set(*spec, c.x0, ConstraintSet::X1, 1e-9)) rd.fail(x_anchor, "x0 violates X1");

  if (const auto n = root["closed_loop"]) {
    rd.keys(n, "closed_loop", {"max_steps", "convergence_epsilon", "tail_patience"});
    rd.maybe(n, "max_steps", c.closed_loop.max_steps, "closed_loop");
    rd.maybe(n, "convergence_epsilon", c.closed_loop.convergence_epsilon, "closed_loop");
    rd.maybe(n, "tail_patience", c.closed_loop.tail_patience, "closed_loop");
    if (c.closed_loop.max_steps < 0 || c.closed_loop.tail_patience < 1 || !(c.closed_loop.convergence_epsilon >= 0.0))
      rd.fail(n, "closed_loop: max_steps >= 0, tail_patience >= 1 and convergence_epsilon >= 0 required");
  }
  if (const auto n = root["solver"]) read_solver(rd, n, c.closed_loop.solver);
  if (const auto n = root["bounds"]) read_bounds(rd, n, c.analysis);
  if (const auto n = root["oracle"]) read_oracle(rd, n, c.oracle);
  if (const auto n = root["output"]) {
    rd.keys(n, "output", {"dir", "jobs"});
    rd.maybe(n, "dir", out.output_dir, "output");
    rd.maybe(n, "jobs", c.jobs, "output");
    if (c.jobs < 1) rd.fail(n["jobs"], "output.jobs must be at least 1");
  }
  c.analysis.solver = c.closed_loop.solver;
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":1: cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string canonical_config(const ScenarioConfig& c) {
  std::map<std::string, std::string> kv;
  const auto num = [](double v) { return format_number(v); };
  kv["scenario"] = c.name;
  kv["model.id"] = c.model_id;
  for (const auto& [k, v] : c.overrides) kv["model.overrides." + k] = num(v);
  std::string pairs;
  for (const auto& p : c.pairs) pairs += "[" + std::to_string(p.N) + "," + std::to_string(p.Ntilde) + "]";
  kv["horizons.pairs"] = pairs;
  std::string x0;
  for (Eigen::Index i = 0; i < c.x0.size(); ++i) x0 += (i ? "," : "") + num(c.x0(i));
  kv["x0"] = "[" + x0 + "]";
  kv["closed_loop.max_steps"] = std::to_string(c.closed_loop.max_steps);
  kv["closed_loop.convergence_epsilon"] = num(c.closed_loop.convergence_epsilon);
  kv["closed_loop.tail_patience"] = std::to_string(c.closed_loop.tail_patience);
  const auto& s = c.closed_loop.solver;
  kv["solver.kkt_tolerance"] = num(s.kkt_tolerance);
  kv["solver.max_outer_iterations"] = std::to_string(s.max_outer_iterations);
  kv["solver.backtracking_factor"] = num(s.backtracking_factor);
  kv["solver.sufficient_decrease"] = num(s.sufficient_decrease);
  kv["solver.hessian"] = s.hessian_mode == HessianMode::GaussNewton ? "gauss_newton" : "exact_for_quadratic";
  kv["solver.constraint_violation_tolerance"] = num(s.constraint_violation_tolerance);
  kv["solver.elastic_penalty"] = num(s.elastic_penalty);
  kv["solver.newton_polish_threshold"] = num(s.newton_polish_threshold);
  const auto& a = c.analysis;
  kv["bounds.provenance"] = to_string(a.provenance);
  kv["bounds.delta"] = to_string(a.delta_method);
  kv["bounds.nu"] = to_string(a.nu_method);
  kv["bounds.baseline_lcss"] = a.baseline_lcss ? "true" : "false";
  kv["bounds.check_tail"] = a.check_tail ? "true" : "false";
  kv["bounds.negligible_lambda"] = num(a.negligible_lambda);
  const auto& o = c.oracle;
  kv["oracle.state_nodes"] = std::to_string(o.state_nodes);
  kv["oracle.input_nodes"] = std::to_string(o.input_nodes);
  kv["oracle.interpolation"] = o.interpolation == Interpolation::Nearest ? "nearest" : "multilinear";
  kv["oracle.state_range"] = num(o.state_range);
  kv["oracle.samples"] = std::to_string(o.samples);
  kv["oracle.sample_range"] = num(o.sample_range);
  kv["oracle.max_N"] = std::to_string(o.max_N);
  kv["oracle.tolerance"] = num(o.tolerance);
  std::string out;
  for (const auto& [k, v] : kv) out += k + ": " + v + "\n";
  return out;
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace hcmpc
