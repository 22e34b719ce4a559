#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "robreg/dataset.hpp"
#include "robreg/huber.hpp"
#include "robreg/robust_weights.hpp"

namespace robreg {

enum class EstimatorKind { two_step, plain_huber, ols, oracle_huber_on_clean };

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

enum class BetaKind { first_axis, uniform };

/// One sweep: the cross product of contamination specs and problem sizes,
/// each run with every estimator and every seed.
struct ExperimentSpec {
  GeneratorSpec generator;
  std::vector<ContaminationSpec> contamination_grid;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sizes;  // (n, d)
  std::vector<EstimatorKind> estimators;
  std::vector<std::uint64_t> seeds;
  RobustWeightConfig rw_cfg;
  HuberConfig huber_cfg;

  // True coefficients: beta_scale * e_1 or beta_scale * (1..1)/sqrt(d).
  BetaKind beta_kind = BetaKind::uniform;
  double beta_scale = 1.0;

  std::uint64_t master_seed = 1;

  Eigen::VectorXd beta_star(Eigen::Index d) const;
  void validate() const;
};

struct ExperimentRecord {
  double eps = 0.0;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::string attack;
  std::string estimator;
  std::uint64_t seed = 0;
  double l2_error = 0.0;
  double mu_error = 0.0;
  double lambda_max = 0.0;
  double runtime_ms = 0.0;
  bool converged = false;
};

/// Runs every (cell, seed) task, optionally in parallel. Tasks own RNG
/// streams derived from (master seed, cell index, seed value), so worker
/// count never changes the results. When records_csv_path is non-empty,
/// records are appended in deterministic order and flushed as they
/// complete. Per-task failures produce a record with NaN errors instead of
/// aborting the sweep.
std::vector<ExperimentRecord> run_sweep(const ExperimentSpec& spec,
                                        const std::string& records_csv_path = "",
                                        int workers = 1);

struct SummaryRow {
  double eps = 0.0;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::string attack;
  std::string estimator;
  double median_error = 0.0;
  double iqr = 0.0;
  int n_seeds = 0;
};

/// Per-cell medians and interquartile ranges of the l2 error, ordered by
/// (eps, n, d, attack, estimator). Records with NaN errors are dropped.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

extern const char* const kRecordsCsvHeader;

void write_records_csv(const std::vector<ExperimentRecord>& records,
                       const std::string& path);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);
void write_summary_json(const std::vector<SummaryRow>& rows, const std::string& path);

/// Exact median (mean of the middle pair for even counts) and type-7
/// interquartile range; shared by summarize and the tests.
double median_of(std::vector<double> values);
double iqr_of(std::vector<double> values);

}  // namespace robreg
