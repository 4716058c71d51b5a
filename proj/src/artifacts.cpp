#include "hcmpc/artifacts.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace hcmpc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

std::string cell(const json& v) { return v.is_number() ? format_number(v.get<double>()) : "NA"; }

std::string header_line(const ScenarioConfig& config) {
  return std::string("# ") + kToolVersion + " config_sha256=" + sha256_hex(canonical_config(config)) + "\n";
}

std::string header_line(const json& doc) {
  return "# " + doc.value("tool_version", std::string(kToolVersion)) +
         " config_sha256=" + doc.value("config_sha256", std::string("unknown")) + "\n";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json interval_json(const std::optional<Interval>& i) {
  if (!i) return nullptr;
  return json{{"lower", num(i->lower)}, {"upper", num(i->upper)}};
}

json self_description(const ScenarioConfig& config) {
  const auto canon = canonical_config(config);
  return json{{"tool_version", kToolVersion}, {"config_sha256", sha256_hex(canon)}, {"config", canon}};
}

json run_json(const SweepRow& row) {
  json j;
  j["N"] = row.horizons.N;
  j["Ntilde"] = row.horizons.Ntilde;
  j["ok"] = row.ok;
  j["error"] = row.error;
  j["termination"] = to_string(row.run.termination);
  j["recorded_steps"] = row.run.steps.size();
  j["failed_step"] = row.run.failed_step;
  j["J_T"] = num(row.cost.J_T);
  j["tail"] = num(row.cost.tail);
  j["tail_rate"] = num(row.cost.rho);
  j["max_x1_residual"] = num(row.run.max_x1_residual);
  json safety = json::object();
  if (row.run.model)
    for (const auto& [k, v] : safety_minima(row.run)) safety["min_" + k] = num(v);
  j["safety"] = safety;
  j["bounds"] = row.ok ? bound_report_json(row.report) : json(nullptr);
  return j;
}

std::string trajectory_csv(const ScenarioConfig& config, const SweepRow& row) {
  std::string s = header_line(config) + "k,px,py,pz\n";
  for (std::size_t k = 0; k < row.run.steps.size(); ++k) {
    const auto& x = row.run.steps[k].x;
    s += std::to_string(k) + "," + format_number(x(0)) + "," + format_number(x(1)) + "," + format_number(x(2)) + "\n";
  }
  return s;
}

}  // namespace

json bound_report_json(const BoundReport& r) {
  json j;
  j["N"] = r.horizons.N;
  j["Ntilde"] = r.horizons.Ntilde;
  j["provenance"] = to_string(r.provenance);
  j["delta_method"] = to_string(r.delta_method);
  j["nu_method"] = to_string(r.nu_method);
  j["V"] = num(r.V);
  j["lambda0"] = num(r.lambda0);
  j["lmax"] = num(r.lmax);
  j["lmin"] = num(r.lmin);
  j["sigma"] = json{{"sigma1", opt(r.est.sigma1)},
                    {"sigma2", opt(r.est.sigma2)},
                    {"sigma3", opt(r.est.sigma3)},
                    {"sigma4", opt(r.est.sigma4)},
                    {"valid", r.est.valid},
                    {"violations", r.est.violations}};
  j["alpha_online"] = opt(r.alpha_online);
  j["omega_online"] = opt(r.omega_online);
  j["delta"] = opt(r.delta);
  j["nu"] = opt(r.nu);
  j["kappa"] = opt(r.kappa);
  j["alpha_explicit"] = opt(r.alpha_explicit);
  j["omega_explicit"] = opt(r.omega_explicit);
  j["beta"] = opt(r.beta);
  j["alpha_lcss"] = opt(r.alpha_lcss);
  j["stability_gap"] = opt(r.stability_gap);
  j["omega_gap"] = opt(r.omega_gap);
  j["upper_prop2"] = opt(r.upper_prop2);
  j["lower_prop5"] = opt(r.lower_prop5);
  j["alpha_applicable"] = r.alpha_applicable;
  j["omega_applicable"] = r.omega_applicable;
  j["interval_online"] = interval_json(r.interval_online);
  j["interval_explicit"] = interval_json(r.interval_explicit);
  j["notes"] = r.notes;
  return j;
}

std::map<std::string, double> safety_minima(const ClosedLoopRun& run) {
  std::map<std::string, double> out;
  if (!run.model || !run.model->safety_metrics) return out;
  for (const auto& s : run.steps)
    for (const auto& [k, v] : run.model->safety_metrics(s.x)) {
      auto it = out.find(k);
      if (it == out.end()) out[k] = v;
      else it->second = std::min(it->second, v);
    }
  return out;
}

void write_simulation(const fs::path& dir, const ScenarioConfig& config, const SweepRow& row) {
  fs::create_directories(dir);
  const auto& run = row.run;
  const int n = run.model ? run.model->state_dim : 0;
  const int m = run.model ? run.model->input_dim : 0;

  std::vector<std::optional<double>> alphas(run.steps.size());
  for (const auto& sa : row.steps)
    if (sa.k >= 0 && static_cast<std::size_t>(sa.k) < alphas.size()) alphas[sa.k] = sa.alpha_online;
  const auto rdp = rdp_check(run, alphas);

  std::string csv = header_line(config) + "k";
  for (int i = 0; i < n; ++i) csv += ",x" + std::to_string(i);
  for (int i = 0; i < m; ++i) csv += ",u" + std::to_string(i);
  csv += ",stage_cost,V,alpha_online,rdp_pass\n";
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    const auto& s = run.steps[k];
    csv += std::to_string(k);
    for (int i = 0; i < n; ++i) csv += "," + format_number(s.x(i));
    for (int i = 0; i < m; ++i) csv += "," + format_number(s.u(i));
    csv += "," + format_number(s.stage_cost) + "," + format_number(s.solution.value) + "," + cell(alphas[k]) + ",";
    csv += alphas[k] && k < rdp.alpha_pass.size() ? (rdp.alpha_pass[k] ? "1" : "0") : "NA";
    csv += "\n";
  }
  write_file(dir / "steps.csv", csv);

  json summary = self_description(config);
  summary["scenario"] = config.name;
  summary["run"] = run_json(row);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (config.model_id == "quadrotor6dof")
    write_file(dir / ("trajectory_N" + std::to_string(row.horizons.N) + "_Nt" + std::to_string(row.horizons.Ntilde) +
                      ".csv"),
               trajectory_csv(config, row));
}

void write_sweep(const fs::path& dir, const ScenarioConfig& config, const std::vector<SweepRow>& rows) {
  fs::create_directories(dir);
  json doc = self_description(config);
  doc["scenario"] = config.name;
  doc["rows"] = json::array();
  std::string csv = header_line(config) +
                    "N,Ntilde,ok,termination,recorded_steps,V,J_T,tail,alpha_online,omega_online,alpha_explicit,"
                    "omega_explicit,alpha_lcss,delta,nu,kappa,upper_prop2,lower_prop5,online_lower,online_upper\n";
  for (const auto& row : rows) {
    const json j = run_json(row);
    doc["rows"].push_back(j);
    const json b = j["bounds"].is_null() ? json::object() : j["bounds"];
    const auto field = [&](const char* k) { return b.contains(k) ? cell(b[k]) : std::string("NA"); };
    const json iv = b.contains("interval_online") ? b["interval_online"] : json(nullptr);
    csv += std::to_string(row.horizons.N) + "," + std::to_string(row.horizons.Ntilde) + "," + (row.ok ? "1" : "0") +
           "," + to_string(row.run.termination) + "," + std::to_string(row.run.steps.size()) + "," + field("V") + "," +
           cell(j["J_T"]) + "," + cell(j["tail"]) + "," + field("alpha_online") + "," + field("omega_online") + "," +
           field("alpha_explicit") + "," + field("omega_explicit") + "," + field("alpha_lcss") + "," +
           field("delta") + "," + field("nu") + "," + field("kappa") + "," + field("upper_prop2") + "," +
           field("lower_prop5") + "," + (iv.is_null() ? "NA" : cell(iv["lower"])) + "," +
           (iv.is_null() ? "NA" : cell(iv["upper"])) + "\n";
    if (config.model_id == "quadrotor6dof" && !row.run.steps.empty())
      write_file(dir / ("trajectory_N" + std::to_string(row.horizons.N) + "_Nt" +
                        std::to_string(row.horizons.Ntilde) + ".csv"),
                 trajectory_csv(config, row));
  }
  write_file(dir / "rows.csv", csv);
  write_file(dir / "bounds.json", doc.dump(2) + "\n");
  (void)render_plots(doc, dir);
}

std::vector<fs::path> render_plots(const json& doc, const fs::path& dir) {
  if (!doc.contains("rows") || !doc["rows"].is_array()) throw std::runtime_error("bounds document has no rows");
  fs::create_directories(dir);
  std::map<int, std::string> per_N;
  const std::string head = header_line(doc);
  for (const auto& row : doc["rows"]) {
    const int N = row.at("N").get<int>();
    const int Nt = row.at("Ntilde").get<int>();
    auto& csv = per_N[N];
    if (csv.empty()) csv = head + "N_minus_Ntilde,alpha_thm1,alpha_lcss,V_over_alpha,V_over_1_minus_omega,J_T\n";
    const json& b = row["bounds"];
    std::string a_thm1 = "NA", a_lcss = "NA", upper = "NA", lower = "NA";
    if (b.is_object()) {
      a_thm1 = cell(b["alpha_explicit"]);
      a_lcss = cell(b["alpha_lcss"]);
      const json& V = b["V"];
      const json& a = b["alpha_online"];
      const json& w = b["omega_online"];
      if (V.is_number() && a.is_number() && a.get<double>() > 0.0 && a.get<double>() <= 1.0)
        upper = format_number(V.get<double>() / a.get<double>());
      if (V.is_number() && w.is_number() && w.get<double>() >= 0.0 && w.get<double>() < 1.0)
        lower = format_number(V.get<double>() / (1.0 - w.get<double>()));
    }
    csv += std::to_string(N - Nt) + "," + a_thm1 + "," + a_lcss + "," + upper + "," + lower + "," +
           cell(row["J_T"]) + "\n";
  }
  std::vector<fs::path> written;
  for (const auto& [N, csv] : per_N) {
    const auto path = dir / ("plot_N" + std::to_string(N) + ".csv");
    write_file(path, csv);
    written.push_back(path);
  }
  return written;
}

}  // namespace hcmpc
