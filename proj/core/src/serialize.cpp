#include "robreg/serialize.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace robreg {

using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& err) {
    throw InvalidInput(path + ": " + err.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open file for writing");
  out << j.dump(2) << "\n";
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw InvalidInput(where + ": expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      throw InvalidInput(where + ": unknown key '" + item.key() + "'");
  }
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw InvalidInput(where + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) {
    if (!x.is_number()) throw InvalidInput(where + ": expected numbers");
    v[i++] = x.get<double>();
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array()) throw InvalidInput(where + ": expected an array of rows");
  if (rows.empty()) return Eigen::MatrixXd();
  const Eigen::Index nrows = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd first = vector_from_json(rows[0], where);
  Eigen::MatrixXd m(nrows, first.size());
  m.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < nrows; ++i) {
    Eigen::VectorXd row = vector_from_json(rows[static_cast<std::size_t>(i)], where);
    if (row.size() != m.cols()) throw InvalidInput(where + ": ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

std::string design_name(DesignKind k) {
  switch (k) {
    case DesignKind::gaussian_identity: return "gaussian_identity";
    case DesignKind::rademacher: return "rademacher";
    case DesignKind::uniform_scaled: return "uniform_scaled";
    case DesignKind::student_t: return "student_t";
    case DesignKind::gaussian_cov: return "gaussian_cov";
  }
  return "gaussian_identity";
}

DesignKind design_from_name(const std::string& name) {
  if (name == "gaussian_identity") return DesignKind::gaussian_identity;
  if (name == "rademacher") return DesignKind::rademacher;
  if (name == "uniform_scaled") return DesignKind::uniform_scaled;
  if (name == "student_t") return DesignKind::student_t;
  if (name == "gaussian_cov") return DesignKind::gaussian_cov;
  throw InvalidInput("unknown design: " + name);
}

std::string noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::student_t: return "student_t";
    case NoiseKind::laplace: return "laplace";
  }
  return "gaussian";
}

NoiseKind noise_from_name(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "student_t") return NoiseKind::student_t;
  if (name == "laplace") return NoiseKind::laplace;
  throw InvalidInput("unknown noise: " + name);
}

json generator_to_json(const GeneratorSpec& g) {
  json j;
  j["design"] = design_name(g.design);
  j["design_df"] = g.design_df;
  if (g.design_cov.size() > 0) j["design_cov"] = matrix_to_json(g.design_cov);
  if (g.mu.size() > 0) j["mu"] = vector_to_json(g.mu);
  j["noise"] = noise_name(g.noise);
  j["noise_sigma"] = g.noise_sigma;
  j["noise_df"] = g.noise_df;
  j["sigma_sq"] = g.sigma_sq;
  j["sigma_c"] = g.sigma_c;
  j["m4"] = g.m4;
  return j;
}

GeneratorSpec generator_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, where,
                      {"design", "design_df", "design_cov", "mu", "noise",
                       "noise_sigma", "noise_df", "sigma_sq", "sigma_c", "m4"});
  GeneratorSpec g;
  if (j.contains("design")) g.design = design_from_name(j.at("design").get<std::string>());
  if (j.contains("design_df")) g.design_df = j.at("design_df").get<int>();
  if (j.contains("design_cov"))
    g.design_cov = matrix_from_json(j.at("design_cov"), where + ".design_cov");
  if (j.contains("mu")) g.mu = vector_from_json(j.at("mu"), where + ".mu");
  if (j.contains("noise")) g.noise = noise_from_name(j.at("noise").get<std::string>());
  if (j.contains("noise_sigma")) g.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("noise_df")) g.noise_df = j.at("noise_df").get<int>();
  if (j.contains("sigma_sq")) g.sigma_sq = j.at("sigma_sq").get<double>();
  if (j.contains("sigma_c")) g.sigma_c = j.at("sigma_c").get<double>();
  if (j.contains("m4")) g.m4 = j.at("m4").get<double>();
  return g;
}

json contamination_to_json(const ContaminationSpec& c) {
  json j;
  j["eps"] = c.eps;
  j["attack"] = attack_name(c.attack);
  j["seed"] = c.seed;
  switch (c.attack) {
    case AttackKind::point_cluster:
      j["cluster_x"] = vector_to_json(c.cluster_x);
      j["cluster_y"] = c.cluster_y;
      break;
    case AttackKind::leverage:
      j["leverage_scale"] = c.leverage_scale;
      j["response_flip"] = c.response_flip;
      break;
    case AttackKind::response_only:
      j["response_magnitude"] = c.response_magnitude;
      break;
    case AttackKind::mean_shift:
      if (c.shift_direction.size() > 0)
        j["shift_direction"] = vector_to_json(c.shift_direction);
      j["shift_magnitude"] = c.shift_magnitude;
      break;
    case AttackKind::none: break;
  }
  return j;
}

ContaminationSpec contamination_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, where,
                      {"eps", "attack", "seed", "cluster_x", "cluster_y",
                       "leverage_scale", "response_flip", "response_magnitude",
                       "shift_direction", "shift_magnitude"});
  ContaminationSpec c;
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  if (j.contains("attack")) c.attack = attack_from_name(j.at("attack").get<std::string>());
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("cluster_x"))
    c.cluster_x = vector_from_json(j.at("cluster_x"), where + ".cluster_x");
  if (j.contains("cluster_y")) c.cluster_y = j.at("cluster_y").get<double>();
  if (j.contains("leverage_scale")) c.leverage_scale = j.at("leverage_scale").get<double>();
  if (j.contains("response_flip")) c.response_flip = j.at("response_flip").get<bool>();
  if (j.contains("response_magnitude"))
    c.response_magnitude = j.at("response_magnitude").get<double>();
  if (j.contains("shift_direction"))
    c.shift_direction = vector_from_json(j.at("shift_direction"), where + ".shift_direction");
  if (j.contains("shift_magnitude"))
    c.shift_magnitude = j.at("shift_magnitude").get<double>();
  return c;
}

json rw_config_to_json(const RobustWeightConfig& cfg) {
  json j;
  j["eps"] = cfg.eps;
  j["mode"] = cov_model_name(cfg.mode);
  j["c_term"] = cfg.c_term;
  if (!std::isnan(cfg.sigma_c_sq)) j["sigma_c_sq"] = cfg.sigma_c_sq;
  j["max_outer"] = cfg.max_outer;
  j["filter_rounds_per_outer"] = cfg.filter_rounds_per_outer;
  j["power_tol"] = cfg.power_tol;
  j["power_max_iter"] = cfg.power_max_iter;
  j["seed"] = cfg.seed;
  return j;
}

RobustWeightConfig rw_config_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, where,
                      {"eps", "mode", "c_term", "sigma_c_sq", "max_outer",
                       "filter_rounds_per_outer", "power_tol", "power_max_iter",
                       "seed"});
  RobustWeightConfig cfg;
  if (j.contains("mode")) cfg.mode = cov_model_from_name(j.at("mode").get<std::string>());
  if (cfg.mode == CovModel::bounded_cov) cfg.c_term = 9.0;
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("c_term")) cfg.c_term = j.at("c_term").get<double>();
  if (j.contains("sigma_c_sq")) cfg.sigma_c_sq = j.at("sigma_c_sq").get<double>();
  if (j.contains("max_outer")) cfg.max_outer = j.at("max_outer").get<int>();
  if (j.contains("filter_rounds_per_outer"))
    cfg.filter_rounds_per_outer = j.at("filter_rounds_per_outer").get<int>();
  if (j.contains("power_tol")) cfg.power_tol = j.at("power_tol").get<double>();
  if (j.contains("power_max_iter")) cfg.power_max_iter = j.at("power_max_iter").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

json huber_config_to_json(const HuberConfig& cfg) {
  json j;
  j["lambda_scaled"] = cfg.lambda_scaled;
  j["grad_tol"] = cfg.grad_tol;
  j["max_iter"] = cfg.max_iter;
  j["step"] = step_rule_name(cfg.step);
  if (cfg.beta0.size() > 0) j["beta0"] = vector_to_json(cfg.beta0);
  return j;
}

HuberConfig huber_config_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, where,
                      {"lambda_scaled", "grad_tol", "max_iter", "step", "beta0"});
  HuberConfig cfg;
  if (j.contains("lambda_scaled")) cfg.lambda_scaled = j.at("lambda_scaled").get<double>();
  if (j.contains("grad_tol")) cfg.grad_tol = j.at("grad_tol").get<double>();
  if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<int>();
  if (j.contains("step")) cfg.step = step_rule_from_name(j.at("step").get<std::string>());
  if (j.contains("beta0")) cfg.beta0 = vector_from_json(j.at("beta0"), where + ".beta0");
  return cfg;
}

json certificate_to_json(const CertificateReport& c) {
  return json{{"lambda_max", c.lambda_max},
              {"threshold", c.threshold},
              {"dual_cert", c.dual_cert},
              {"pass", c.pass}};
}

}  // namespace

void save_oracle_json(const OracleInstance& inst, const ContaminationSpec& cont,
                      const std::string& path) {
  json j;
  j["schema_version"] = 1;
  j["beta_star"] = vector_to_json(inst.beta_star);
  json idx = json::array();
  for (Eigen::Index i : inst.outlier_idx) idx.push_back(i);
  j["outlier_idx"] = idx;
  j["seed"] = inst.seed;
  j["spec"] = json{{"generator", generator_to_json(inst.spec)},
                   {"contamination", contamination_to_json(cont)},
                   {"n", inst.dataset.n()},
                   {"d", inst.dataset.d()}};
  write_json_file(j, path);
}

OracleInstance load_oracle_json(const std::string& path, const Dataset& observed) {
  const json j = load_json_file(path);
  reject_unknown_keys(j, path, {"schema_version", "beta_star", "outlier_idx", "seed", "spec"});
  const json& spec = j.at("spec");
  reject_unknown_keys(spec, path + ".spec", {"generator", "contamination", "n", "d"});

  const Eigen::Index n = spec.at("n").get<Eigen::Index>();
  const Eigen::Index d = spec.at("d").get<Eigen::Index>();
  if (n != observed.n() || d != observed.d())
    throw InvalidInput(path + ": sidecar dimensions do not match the dataset");

  const Eigen::VectorXd beta_star = vector_from_json(j.at("beta_star"), path + ".beta_star");
  const GeneratorSpec gen =
      generator_from_json(spec.at("generator"), path + ".spec.generator");
  const std::uint64_t seed = j.at("seed").get<std::uint64_t>();

  // Regenerate the clean draws from the recorded seed, then overlay the
  // observed rows as the contaminated view.
  OracleInstance inst = generate(gen, n, d, beta_star, seed);
  inst.dataset = observed;
  inst.outlier_idx.clear();
  for (const auto& v : j.at("outlier_idx"))
    inst.outlier_idx.push_back(v.get<Eigen::Index>());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index i : inst.outlier_idx) {
    if (i < 0 || i >= n) throw InvalidInput(path + ": outlier index out of range");
    inst.rho.row(i) = observed.X.row(i) - inst.x_clean.row(i);
    inst.theta_resp[i] =
        (observed.y[i] - observed.X.row(i).dot(beta_star) - inst.xi[i]) / root_n;
  }
  return inst;
}

std::string estimation_result_to_json(const EstimationResult& result) {
  json j;
  j["schema_version"] = 1;
  j["beta_hat"] = vector_to_json(result.beta_hat);
  j["objective"] = result.objective;
  j["grad_norm"] = result.grad_norm;
  j["iters"] = result.iters;
  j["converged"] = result.converged;
  j["lambda_scaled"] = result.lambda_scaled_used;
  if (result.theta_hat) j["theta_hat"] = vector_to_json(*result.theta_hat);
  if (result.robust_stage) {
    const auto& rw = *result.robust_stage;
    CertificateReport cert;
    cert.lambda_max = rw.lambda_max;
    cert.threshold = rw.threshold;
    cert.dual_cert = rw.dual_cert;
    cert.pass = rw.lambda_max <= rw.threshold;
    j["certificate"] = certificate_to_json(cert);
    j["robust_stage"] = json::parse(robust_weight_result_to_json(rw));
  }
  return j.dump(2);
}

void save_estimation_result_json(const EstimationResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open file for writing");
  out << estimation_result_to_json(result) << "\n";
}

std::string robust_weight_result_to_json(const RobustWeightResult& result) {
  json j;
  j["w"] = vector_to_json(result.w.w);
  j["mu_w"] = vector_to_json(result.mu_w);
  j["lambda_max"] = result.lambda_max;
  j["dual_cert"] = result.dual_cert;
  j["threshold"] = result.threshold;
  j["outer_iters"] = result.outer_iters;
  j["terminated_by"] =
      result.terminated_by == Termination::certificate ? "certificate" : "budget";
  return j.dump(2);
}

void save_robust_weight_result_json(const RobustWeightResult& result,
                                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open file for writing");
  out << robust_weight_result_to_json(result) << "\n";
}

std::string condition_report_to_json(const ConditionReport& report) {
  json j;
  j["schema_version"] = 1;
  j["eta_grid"] = report.eta_grid;
  json lhs = json::array();
  for (const auto& row : report.lhs)
    lhs.push_back(json{{"lhs1", row[0]}, {"lhs2", row[1]}, {"lhs3", row[2]}, {"lhs4", row[3]}});
  j["lhs"] = lhs;
  j["delta_norm"] = report.delta_norm;
  json lin = json::array();
  for (const auto& row : report.ratio_linear)
    lin.push_back(json::array({row[0], row[1], row[2]}));
  j["ratio_linear"] = lin;
  j["ratio_quadratic"] = report.ratio_quadratic;
  j["c_candidates"] =
      json{{"c1", report.c1}, {"c2", report.c2}, {"c3", report.c3}, {"c4", report.c4}};
  j["r0_bound"] = report.r0_bound;
  return j.dump(2);
}

void save_condition_report_json(const ConditionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open file for writing");
  out << condition_report_to_json(report) << "\n";
}

ExperimentSpec load_experiment_spec_json(const std::string& path) {
  const json j = load_json_file(path);
  reject_unknown_keys(j, path,
                      {"schema_version", "generator", "contamination_grid", "sizes",
                       "estimators", "seeds", "rw_cfg", "huber_cfg", "beta_kind",
                       "beta_scale", "master_seed"});
  ExperimentSpec spec;
  if (j.contains("generator"))
    spec.generator = generator_from_json(j.at("generator"), path + ".generator");
  if (j.contains("contamination_grid")) {
    std::size_t k = 0;
    for (const auto& item : j.at("contamination_grid")) {
      spec.contamination_grid.push_back(contamination_from_json(
          item, path + ".contamination_grid[" + std::to_string(k) + "]"));
      ++k;
    }
  }
  if (j.contains("sizes")) {
    for (const auto& item : j.at("sizes")) {
      if (!item.is_array() || item.size() != 2)
        throw InvalidInput(path + ".sizes: expected [n, d] pairs");
      spec.sizes.emplace_back(item[0].get<Eigen::Index>(), item[1].get<Eigen::Index>());
    }
  }
  if (j.contains("estimators")) {
    for (const auto& item : j.at("estimators"))
      spec.estimators.push_back(estimator_from_name(item.get<std::string>()));
  }
  if (j.contains("seeds")) {
    for (const auto& item : j.at("seeds"))
      spec.seeds.push_back(item.get<std::uint64_t>());
  }
  if (j.contains("rw_cfg"))
    spec.rw_cfg = rw_config_from_json(j.at("rw_cfg"), path + ".rw_cfg");
  if (j.contains("huber_cfg"))
    spec.huber_cfg = huber_config_from_json(j.at("huber_cfg"), path + ".huber_cfg");
  if (j.contains("beta_kind")) {
    const std::string kind = j.at("beta_kind").get<std::string>();
    if (kind == "first_axis")
      spec.beta_kind = BetaKind::first_axis;
    else if (kind == "uniform")
      spec.beta_kind = BetaKind::uniform;
    else
      throw InvalidInput(path + ": unknown beta_kind '" + kind + "'");
  }
  if (j.contains("beta_scale")) spec.beta_scale = j.at("beta_scale").get<double>();
  if (j.contains("master_seed")) spec.master_seed = j.at("master_seed").get<std::uint64_t>();
  return spec;
}

void save_experiment_spec_json(const ExperimentSpec& spec, const std::string& path) {
  json j;
  j["schema_version"] = 1;
  j["generator"] = generator_to_json(spec.generator);
  json grid = json::array();
  for (const auto& c : spec.contamination_grid) grid.push_back(contamination_to_json(c));
  j["contamination_grid"] = grid;
  json sizes = json::array();
  for (const auto& [n, d] : spec.sizes) sizes.push_back(json::array({n, d}));
  j["sizes"] = sizes;
  json estimators = json::array();
  for (const auto& e : spec.estimators) estimators.push_back(estimator_name(e));
  j["estimators"] = estimators;
  j["seeds"] = spec.seeds;
  j["rw_cfg"] = rw_config_to_json(spec.rw_cfg);
  j["huber_cfg"] = huber_config_to_json(spec.huber_cfg);
  j["beta_kind"] = spec.beta_kind == BetaKind::first_axis ? "first_axis" : "uniform";
  j["beta_scale"] = spec.beta_scale;
  j["master_seed"] = spec.master_seed;
  write_json_file(j, path);
}

void write_summary_json(const std::vector<SummaryRow>& rows, const std::string& path) {
  json j;
  j["schema_version"] = 1;
  json arr = json::array();
  for (const auto& row : rows) {
    arr.push_back(json{{"eps", row.eps},
                       {"n", row.n},
                       {"d", row.d},
                       {"attack", row.attack},
                       {"estimator", row.estimator},
                       {"median_error", row.median_error},
                       {"iqr", row.iqr},
                       {"n_seeds", row.n_seeds}});
  }
  j["cells"] = arr;
  write_json_file(j, path);
}

}  // namespace robreg
