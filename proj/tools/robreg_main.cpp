// Command-line front end: data generation, the two-step estimator, the
// robust-mean stage, experiment sweeps and condition diagnostics.
//
// Exit codes: 0 success, 1 input/config error, 2 numerical non-convergence.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robreg/dataset.hpp"
#include "robreg/rng.hpp"
#include "robreg/diagnostics.hpp"
#include "robreg/harness.hpp"
#include "robreg/huber.hpp"
#include "robreg/robust_weights.hpp"
#include "robreg/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> values;
  std::string cell;
  std::istringstream ss(text);
  while (std::getline(ss, cell, ','))
    values.push_back(std::stod(cell));
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

std::string sidecar_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".oracle.json";
  return csv_path + ".oracle.json";
}

struct GenerateArgs {
  int n = 1000;
  int d = 5;
  double eps = 0.0;
  std::string attack = "none";
  std::string design = "gaussian_identity";
  int design_df = 5;
  std::string noise = "gaussian";
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;
  std::string out;
  std::string beta;           // comma list; empty = unit-norm uniform vector
  std::string mu;             // comma list; empty = zero
  double attack_magnitude = 100.0;
  double cluster_y = 0.0;
  std::string cluster_x;      // comma list; empty = magnitude * e1
  std::string shift_direction;
  bool response_flip = true;
};

int run_generate(const GenerateArgs& args) {
  robreg::GeneratorSpec gen;
  gen.design = [&] {
    if (args.design == "gaussian_identity") return robreg::DesignKind::gaussian_identity;
    if (args.design == "rademacher") return robreg::DesignKind::rademacher;
    if (args.design == "uniform_scaled") return robreg::DesignKind::uniform_scaled;
    if (args.design == "student_t") return robreg::DesignKind::student_t;
    throw robreg::InvalidInput("unknown design: " + args.design);
  }();
  gen.design_df = args.design_df;
  gen.noise = [&] {
    if (args.noise == "gaussian") return robreg::NoiseKind::gaussian;
    if (args.noise == "student_t") return robreg::NoiseKind::student_t;
    if (args.noise == "laplace") return robreg::NoiseKind::laplace;
    throw robreg::InvalidInput("unknown noise: " + args.noise);
  }();
  gen.noise_sigma = args.noise_sigma;
  if (!args.mu.empty()) gen.mu = parse_vector(args.mu);

  const Eigen::Index d = args.d;
  Eigen::VectorXd beta_star;
  if (args.beta.empty()) {
    beta_star = Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
  } else {
    beta_star = parse_vector(args.beta);
    if (beta_star.size() != d)
      throw robreg::InvalidInput("--beta must list exactly d values");
  }

  robreg::OracleInstance inst = robreg::generate(gen, args.n, d, beta_star, args.seed);

  robreg::ContaminationSpec cont;
  cont.eps = args.eps;
  cont.attack = robreg::attack_from_name(args.attack);
  cont.seed = robreg::Rng::derive_stream(args.seed, 0x636f6e74ULL, 0);
  cont.leverage_scale = args.attack_magnitude;
  cont.response_flip = args.response_flip;
  cont.response_magnitude = args.attack_magnitude;
  cont.shift_magnitude = args.attack_magnitude;
  if (!args.shift_direction.empty()) cont.shift_direction = parse_vector(args.shift_direction);
  if (cont.attack == robreg::AttackKind::point_cluster) {
    cont.cluster_x = args.cluster_x.empty()
                         ? (args.attack_magnitude * Eigen::VectorXd::Unit(d, 0)).eval()
                         : parse_vector(args.cluster_x);
    cont.cluster_y = args.cluster_y;
  }
  inst = robreg::contaminate(inst, cont);

  robreg::save_csv(inst.dataset, args.out);
  robreg::save_oracle_json(inst, cont, sidecar_path(args.out));
  std::cout << "wrote " << args.out << " and " << sidecar_path(args.out) << "\n";
  return kExitOk;
}

struct EstimateArgs {
  std::string input;
  double eps = 0.1;
  std::string mode = "identity_cov";
  double lambda = 0.0;
  double c_term = 0.0;  // 0 = mode default
  std::string out;
  std::uint64_t seed = 1;
  std::string step = "backtracking_gd";
};

robreg::RobustWeightConfig make_rw_cfg(double eps, const std::string& mode,
                                       double c_term, std::uint64_t seed) {
  robreg::RobustWeightConfig cfg =
      robreg::cov_model_from_name(mode) == robreg::CovModel::identity_cov
          ? robreg::RobustWeightConfig::identity(eps)
          : robreg::RobustWeightConfig::bounded(eps);
  if (c_term > 0.0) cfg.c_term = c_term;
  cfg.seed = seed;
  return cfg;
}

int run_estimate(const EstimateArgs& args) {
  const robreg::Dataset ds = robreg::load_csv(args.input);
  const robreg::RobustWeightConfig rw_cfg =
      make_rw_cfg(args.eps, args.mode, args.c_term, args.seed);
  robreg::HuberConfig huber_cfg;
  huber_cfg.lambda_scaled = args.lambda;
  huber_cfg.step = robreg::step_rule_from_name(args.step);

  const robreg::EstimationResult result =
      robreg::two_step_estimate(ds, args.eps, rw_cfg, huber_cfg);
  if (args.out.empty())
    std::cout << robreg::estimation_result_to_json(result) << "\n";
  else
    robreg::save_estimation_result_json(result, args.out);

  const bool budget = result.robust_stage &&
                      result.robust_stage->terminated_by == robreg::Termination::budget;
  return (result.converged && !budget) ? kExitOk : kExitNotConverged;
}

struct RobustMeanArgs {
  std::string input;
  double eps = 0.1;
  std::string mode = "identity_cov";
  double c_term = 0.0;
  std::string out;
  std::uint64_t seed = 1;
};

int run_robust_mean(const RobustMeanArgs& args) {
  const robreg::Dataset ds = robreg::load_csv(args.input);
  const robreg::RobustWeightConfig cfg =
      make_rw_cfg(args.eps, args.mode, args.c_term, args.seed);
  const robreg::RobustWeightResult result = robreg::robust_weights(ds, cfg);
  if (args.out.empty())
    std::cout << robreg::robust_weight_result_to_json(result) << "\n";
  else
    robreg::save_robust_weight_result_json(result, args.out);
  return result.terminated_by == robreg::Termination::certificate ? kExitOk
                                                                  : kExitNotConverged;
}

struct SweepArgs {
  std::string config;
  std::string out = "records.csv";
  std::string summary;
  int workers = 1;
};

int run_sweep_cmd(const SweepArgs& args) {
  const robreg::ExperimentSpec spec = robreg::load_experiment_spec_json(args.config);
  const auto records = robreg::run_sweep(spec, args.out, args.workers);
  if (!args.summary.empty())
    robreg::write_summary_json(robreg::summarize(records), args.summary);
  std::cout << "wrote " << records.size() << " records to " << args.out << "\n";
  return kExitOk;
}

struct CertifyArgs {
  std::string input;
  std::string oracle;
  double eps = 0.1;
  std::string mode = "identity_cov";
  double lambda = 0.0;
  double c_term = 0.0;
  std::string beta_hat;  // comma list; empty = run the two-step estimator
  std::string eta_grid;  // comma list; empty = 0.1..1.0
  std::string out;
  std::uint64_t seed = 1;
};

int run_certify(const CertifyArgs& args) {
  const robreg::Dataset ds = robreg::load_csv(args.input);
  const robreg::OracleInstance inst = robreg::load_oracle_json(args.oracle, ds);

  const robreg::RobustWeightConfig rw_cfg =
      make_rw_cfg(args.eps, args.mode, args.c_term, args.seed);
  robreg::HuberConfig huber_cfg;
  huber_cfg.lambda_scaled = args.lambda;

  const robreg::RobustWeightResult rw = robreg::robust_weights(ds, rw_cfg);
  Eigen::VectorXd beta;
  double lambda_used = args.lambda;
  if (args.beta_hat.empty()) {
    const robreg::EstimationResult est = robreg::weighted_huber_fit(ds, rw, huber_cfg);
    beta = est.beta_hat;
    lambda_used = est.lambda_scaled_used;
  } else {
    beta = parse_vector(args.beta_hat);
    if (beta.size() != ds.d())
      throw robreg::InvalidInput("--beta-hat must list exactly d values");
    if (lambda_used <= 0.0) lambda_used = robreg::default_lambda_scaled(ds);
  }

  std::vector<double> grid;
  if (args.eta_grid.empty()) {
    for (int k = 1; k <= 10; ++k) grid.push_back(0.1 * k);
  } else {
    std::istringstream ss(args.eta_grid);
    std::string cell;
    while (std::getline(ss, cell, ',')) grid.push_back(std::stod(cell));
  }

  const robreg::ConditionReport report =
      robreg::check_conditions(inst, rw, beta, lambda_used, grid);
  if (args.out.empty())
    std::cout << robreg::condition_report_to_json(report) << "\n";
  else
    robreg::save_condition_report_json(report, args.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust linear regression: spectral-filtering weights + weighted Huber fit"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset CSV and oracle sidecar");
  gen->add_option("--n", gen_args.n, "Sample count")->envname("RH_N");
  gen->add_option("--d", gen_args.d, "Dimension")->envname("RH_D");
  gen->add_option("--eps", gen_args.eps, "Contamination fraction")->envname("RH_EPS");
  gen->add_option("--attack", gen_args.attack,
                  "none|point_cluster|leverage|response_only|mean_shift")
      ->envname("RH_ATTACK");
  gen->add_option("--design", gen_args.design,
                  "gaussian_identity|rademacher|uniform_scaled|student_t")
      ->envname("RH_DESIGN");
  gen->add_option("--design-df", gen_args.design_df, "Degrees of freedom for student_t design");
  gen->add_option("--noise", gen_args.noise, "gaussian|student_t|laplace");
  gen->add_option("--noise-sigma", gen_args.noise_sigma, "Noise scale");
  gen->add_option("--seed", gen_args.seed, "RNG seed")->envname("RH_SEED");
  gen->add_option("--out", gen_args.out, "Output CSV path")->required()->envname("RH_OUT");
  gen->add_option("--beta", gen_args.beta, "True coefficients, comma separated");
  gen->add_option("--mu", gen_args.mu, "Covariate mean, comma separated");
  gen->add_option("--attack-magnitude", gen_args.attack_magnitude,
                  "Scale/shift/offset used by the attack");
  gen->add_option("--cluster-x", gen_args.cluster_x, "Cluster covariates, comma separated");
  gen->add_option("--cluster-y", gen_args.cluster_y, "Cluster response");
  gen->add_option("--shift-direction", gen_args.shift_direction,
                  "mean_shift direction, comma separated");
  gen->add_flag("--response-flip,!--no-response-flip", gen_args.response_flip,
                "Flip responses in the leverage attack");

  EstimateArgs est_args;
  auto* est = app.add_subcommand("estimate", "Two-step weighted Huber regression");
  est->add_option("--input", est_args.input, "Dataset CSV")->required()->envname("RH_INPUT");
  est->add_option("--eps", est_args.eps, "Contamination fraction")->envname("RH_EPS");
  est->add_option("--mode", est_args.mode, "identity_cov|bounded_cov")->envname("RH_MODE");
  est->add_option("--lambda", est_args.lambda,
                  "Huber threshold lambda_o*sqrt(n); 0 = plug-in")
      ->envname("RH_LAMBDA");
  est->add_option("--c-term", est_args.c_term, "Certificate constant; 0 = mode default");
  est->add_option("--seed", est_args.seed, "RNG seed")->envname("RH_SEED");
  est->add_option("--step", est_args.step, "backtracking_gd|lbfgs");
  est->add_option("--out", est_args.out, "Result JSON path (stdout when omitted)")
      ->envname("RH_OUT");

  RobustMeanArgs mean_args;
  auto* mean = app.add_subcommand("robust-mean", "Robust-weight stage only");
  mean->add_option("--input", mean_args.input, "Dataset CSV")->required()->envname("RH_INPUT");
  mean->add_option("--eps", mean_args.eps, "Contamination fraction")->envname("RH_EPS");
  mean->add_option("--mode", mean_args.mode, "identity_cov|bounded_cov")->envname("RH_MODE");
  mean->add_option("--c-term", mean_args.c_term, "Certificate constant; 0 = mode default");
  mean->add_option("--seed", mean_args.seed, "RNG seed")->envname("RH_SEED");
  mean->add_option("--out", mean_args.out, "Result JSON path (stdout when omitted)")
      ->envname("RH_OUT");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep from a config file");
  sweep->add_option("--config", sweep_args.config, "Sweep config JSON")
      ->required()
      ->envname("RH_CONFIG");
  sweep->add_option("--out", sweep_args.out, "Records CSV path")->envname("RH_OUT");
  sweep->add_option("--summary", sweep_args.summary, "Summary JSON path")
      ->envname("RH_SUMMARY");
  sweep->add_option("--workers", sweep_args.workers, "Parallel workers")
      ->envname("RH_WORKERS");

  CertifyArgs cert_args;
  auto* cert = app.add_subcommand("certify", "Evaluate the deterministic conditions");
  cert->add_option("--input", cert_args.input, "Dataset CSV")->required()->envname("RH_INPUT");
  cert->add_option("--oracle", cert_args.oracle, "Oracle sidecar JSON")
      ->required()
      ->envname("RH_ORACLE");
  cert->add_option("--eps", cert_args.eps, "Contamination fraction")->envname("RH_EPS");
  cert->add_option("--mode", cert_args.mode, "identity_cov|bounded_cov")->envname("RH_MODE");
  cert->add_option("--lambda", cert_args.lambda, "Huber threshold; 0 = plug-in")
      ->envname("RH_LAMBDA");
  cert->add_option("--c-term", cert_args.c_term, "Certificate constant; 0 = mode default");
  cert->add_option("--beta-hat", cert_args.beta_hat,
                   "Evaluate at this beta instead of running the estimator");
  cert->add_option("--eta-grid", cert_args.eta_grid, "Comma separated eta values");
  cert->add_option("--seed", cert_args.seed, "RNG seed")->envname("RH_SEED");
  cert->add_option("--out", cert_args.out, "Report JSON path (stdout when omitted)")
      ->envname("RH_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (gen->parsed()) return run_generate(gen_args);
    if (est->parsed()) return run_estimate(est_args);
    if (mean->parsed()) return run_robust_mean(mean_args);
    if (sweep->parsed()) return run_sweep_cmd(sweep_args);
    if (cert->parsed()) return run_certify(cert_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
