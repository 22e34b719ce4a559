#pragma once

#include <string>

#include "robreg/dataset.hpp"
#include "robreg/diagnostics.hpp"
#include "robreg/harness.hpp"
#include "robreg/huber.hpp"
#include "robreg/robust_weights.hpp"

namespace robreg {

/// JSON sidecar with everything needed to rebuild the OracleInstance next
/// to its CSV: true coefficients, corrupted row indices, generator spec,
/// contamination spec and the seed. Loading regenerates the clean draws
/// from the seed and overlays the attack bookkeeping.
void save_oracle_json(const OracleInstance& inst, const ContaminationSpec& cont,
                      const std::string& path);
OracleInstance load_oracle_json(const std::string& path, const Dataset& observed);

std::string estimation_result_to_json(const EstimationResult& result);
void save_estimation_result_json(const EstimationResult& result, const std::string& path);

std::string robust_weight_result_to_json(const RobustWeightResult& result);
void save_robust_weight_result_json(const RobustWeightResult& result,
                                    const std::string& path);

std::string condition_report_to_json(const ConditionReport& report);
void save_condition_report_json(const ConditionReport& report, const std::string& path);

/// Sweep configuration file mirroring ExperimentSpec. Unknown keys are
/// rejected with their JSON location; missing keys keep their defaults.
ExperimentSpec load_experiment_spec_json(const std::string& path);
void save_experiment_spec_json(const ExperimentSpec& spec, const std::string& path);

}  // namespace robreg
