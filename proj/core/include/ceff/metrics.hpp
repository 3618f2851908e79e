#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <nlohmann/json.hpp>

namespace ceff {

/// Absolute error statistics over one cohort. Errors are in farads, ratios in
/// percent of the label. Empty cohorts report count 0 and no values.
struct ErrorStats {
  std::size_t count = 0;
  double meae = 0.0;
  double maae = 0.0;
  double meaer = 0.0;
  double maaer = 0.0;
};

struct CohortStats {
  ErrorStats all;
  std::optional<ErrorStats> failed;
  std::optional<ErrorStats> non_failed;
};

struct EvalReport {
  CohortStats predicted;
  std::optional<CohortStats> baseline;
  std::optional<double> fail_percent;
};

struct BaselineResults {
  std::span<const double> ceff;
  std::span<const bool> failed;
};

/// Throws LengthMismatch if the spans differ in length.
ErrorStats error_stats(std::span<const double> predicted, std::span<const double> label);

/// Scores `predicted` against `label`. With a baseline, both methods are also
/// scored on the cohorts split by the baseline's failed flag.
EvalReport evaluate(std::span<const double> predicted, std::span<const double> label,
                    const std::optional<BaselineResults>& baseline = std::nullopt);

/// Errors in fF, ratios in percent.
nlohmann::json to_json(const EvalReport& report);

}  // namespace ceff
