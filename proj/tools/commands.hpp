#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace ceff::cli {

/// Settings shared by every subcommand. `config` holds the effective option
/// values and feeds the config hash.
struct RunContext {
  std::string command;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  nlohmann::json config = nlohmann::json::object();
};

/// {tool_version, seed, config_hash} embedded in every artifact.
nlohmann::json provenance(const RunContext& ctx);

struct DriverOverrides {
  std::optional<double> v_low;
  std::optional<double> v_high;
};

struct GenOptions {
  std::string degrees = "3:50";
  int per_degree = 100;
  double train_fraction = 0.1;
  double bbox_min_nm = 30.0;
  double bbox_max_nm = 1e5;
  std::int64_t coord_grid = 1000000;
  std::string tech;
  std::string out;
  std::string manifest;  // defaults to <out>.manifest.json
};

struct LabelOptions {
  std::string in;
  std::string out;
  std::string spice_dir;
  DriverOverrides driver;
};

struct ReduceOptions {
  std::string in;
  std::string out;
  DriverOverrides driver;
};

struct CeffOptions {
  std::string in;
  std::string out;
  std::string method = "dartu";
  DriverOverrides driver;
};

struct SimulateOptions {
  std::string in;
  std::string out;
  bool waveforms = false;
  DriverOverrides driver;
};

struct ExportOptions {
  std::string in;
  std::string labels;
  std::string split;  // corpus manifest written by gen
  std::optional<double> train_fraction;
  std::string out_dir;
  bool bidirectional = false;
};

struct InferOptions {
  std::string weights;
  std::string in;
  std::string out;
  std::size_t batch = 128;
  bool check_invariants = false;
};

struct EvalOptions {
  std::string pred;
  std::string labels;
  std::string baseline;
  std::string out;
};

struct BenchOptions {
  std::string corpus;
  std::string weights;
  std::string out;
  std::size_t batch = 128;
  int repeat = 3;
  std::optional<std::size_t> limit;
};

// Each command writes its artifacts and returns the summary for the run report.
nlohmann::json run_gen(const RunContext& ctx, const GenOptions& o);
nlohmann::json run_label(const RunContext& ctx, const LabelOptions& o);
nlohmann::json run_reduce(const RunContext& ctx, const ReduceOptions& o);
nlohmann::json run_ceff(const RunContext& ctx, const CeffOptions& o);
nlohmann::json run_simulate(const RunContext& ctx, const SimulateOptions& o);
nlohmann::json run_export(const RunContext& ctx, const ExportOptions& o);
nlohmann::json run_infer(const RunContext& ctx, const InferOptions& o);
nlohmann::json run_eval(const RunContext& ctx, const EvalOptions& o);
nlohmann::json run_bench(const RunContext& ctx, const BenchOptions& o);

}  // namespace ceff::cli
