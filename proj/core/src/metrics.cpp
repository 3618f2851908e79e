#include "ceff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ceff/error.hpp"

namespace ceff {

namespace {

void require_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw Error(ErrorKind::LengthMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b) + " entries");
}

ErrorStats subset(std::span<const double> predicted, std::span<const double> label, std::span<const bool> mask,
                  bool keep) {
  std::vector<double> p, l;
  for (std::size_t i = 0; i < label.size(); ++i)
    if (mask[i] == keep) {
      p.push_back(predicted[i]);
      l.push_back(label[i]);
    }
  return error_stats(p, l);
}

CohortStats cohorts(std::span<const double> predicted, std::span<const double> label,
                    std::span<const bool> failed) {
  CohortStats c;
  c.all = error_stats(predicted, label);
  if (!failed.empty()) {
    c.failed = subset(predicted, label, failed, true);
    c.non_failed = subset(predicted, label, failed, false);
  }
  return c;
}

nlohmann::json stats_json(const ErrorStats& s) {
  nlohmann::json j{{"count", s.count}};
  if (s.count == 0) {
    j["MeAE_fF"] = j["MaAE_fF"] = j["MeAER_pct"] = j["MaAER_pct"] = nullptr;
  } else {
    j["MeAE_fF"] = s.meae * 1e15;
    j["MaAE_fF"] = s.maae * 1e15;
    j["MeAER_pct"] = s.meaer;
    j["MaAER_pct"] = s.maaer;
  }
  return j;
}

nlohmann::json cohort_json(const CohortStats& c) {
  nlohmann::json j{{"all", stats_json(c.all)}};
  if (c.failed) j["failed"] = stats_json(*c.failed);
  if (c.non_failed) j["non_failed"] = stats_json(*c.non_failed);
  return j;
}

}  // namespace

ErrorStats error_stats(std::span<const double> predicted, std::span<const double> label) {
  require_length(predicted.size(), label.size(), "predictions and labels");
  ErrorStats s;
  s.count = label.size();
  if (s.count == 0) return s;
  double sum = 0.0, sum_ratio = 0.0;
  for (std::size_t i = 0; i < s.count; ++i) {
    if (!(label[i] > 0.0)) throw Error(ErrorKind::OutOfRangeLabel, "label " + std::to_string(i) + " is not positive");
    const double err = std::abs(predicted[i] - label[i]);
    const double ratio = 100.0 * err / label[i];
    sum += err;
    sum_ratio += ratio;
    s.maae = std::max(s.maae, err);
    s.maaer = std::max(s.maaer, ratio);
  }
  s.meae = sum / static_cast<double>(s.count);
  s.meaer = sum_ratio / static_cast<double>(s.count);
  return s;
}

EvalReport evaluate(std::span<const double> predicted, std::span<const double> label,
                    const std::optional<BaselineResults>& baseline) {
  require_length(predicted.size(), label.size(), "predictions and labels");
  EvalReport r;
  if (!baseline) {
    r.predicted = cohorts(predicted, label, {});
    return r;
  }
  require_length(baseline->ceff.size(), label.size(), "baseline and labels");
  require_length(baseline->failed.size(), label.size(), "baseline flags and labels");
  r.predicted = cohorts(predicted, label, baseline->failed);
  r.baseline = cohorts(baseline->ceff, label, baseline->failed);
  const auto fails = std::count(baseline->failed.begin(), baseline->failed.end(), true);
  r.fail_percent = label.empty() ? 0.0 : 100.0 * static_cast<double>(fails) / static_cast<double>(label.size());
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j{{"predicted", cohort_json(report.predicted)}};
  if (report.baseline) j["baseline"] = cohort_json(*report.baseline);
  if (report.fail_percent) j["fail_percent"] = *report.fail_percent;
  return j;
}

}  // namespace ceff
