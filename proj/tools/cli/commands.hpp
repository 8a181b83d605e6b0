#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace geofuse::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2, kInfeasible = 3 };

/// Stage names in pipeline order.
const std::vector<std::string>& stage_names();

int cmd_generate(const ExperimentConfig& config, std::ostream& log);
int cmd_preprocess(const ExperimentConfig& config, std::ostream& log);
int cmd_optimize(const ExperimentConfig& config, std::ostream& log);
int cmd_train(const ExperimentConfig& config, std::ostream& log);
int cmd_evaluate(const ExperimentConfig& config, std::ostream& log);
int cmd_audit(const ExperimentConfig& config, std::ostream& log);
int cmd_report(const ExperimentConfig& config, std::ostream& log);

/// Every stage in order; an infeasible audit does not stop the report.
int cmd_all(const ExperimentConfig& config, std::ostream& log);

/// Table CSVs keyed by file name (table1.csv ... table6.csv), built from
/// the run artifacts under the output directory.
std::vector<std::pair<std::string, std::string>> build_tables(const ExperimentConfig& config);

}  // namespace geofuse::cli
