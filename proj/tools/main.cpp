#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ceff/error.hpp"
#include "ceff/version.hpp"
#include "commands.hpp"
#include "json_config.hpp"

using namespace ceff;
using namespace ceff::cli;
using json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::NonPhysicalMoments:
    case ErrorKind::NoCrossing:
      return kNumeric;
    default:
      return kValidation;
  }
}

// Options that never change an artifact stay out of the config hash.
const std::set<std::string> kUnhashed = {"help", "config", "report", "workers", "version"};

json effective_config(const CLI::App& app, const CLI::App& sub) {
  json j = json::object();
  const auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (kUnhashed.count(name)) continue;
      if (opt->count() > 0) {
        const auto r = opt->results();
        j[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else if (!opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
  };
  collect(app);
  collect(sub);
  return j;
}

void add_driver_overrides(CLI::App* sub, DriverOverrides& d) {
  sub->add_option("--v-low", d.v_low, "Override the low slew threshold (fraction of vdd)");
  sub->add_option("--v-high", d.v_high, "Override the high slew threshold (fraction of vdd)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective capacitance toolkit: RC reduction, Dartu, transient oracle, graph export, GAT inference"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  RunContext ctx;
  std::string report_path;
  app.add_option("--seed", ctx.seed, "Seed recorded in every artifact and used by generators");
  app.add_option("--workers", ctx.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--report", report_path, "Also write the run report to this file");

  std::function<json()> run;
  const auto command = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    return sub;
  };

  GenOptions gen;
  {
    CLI::App* sub = command("gen", "Generate a synthetic RC net corpus and its split manifest");
    sub->add_option("--degrees", gen.degrees, "Degree range lo:hi (pins per net, driver included)");
    sub->add_option("--per-degree", gen.per_degree, "Nets per degree")->check(CLI::PositiveNumber);
    sub->add_option("--train-fraction", gen.train_fraction, "Fraction of each degree put in the train split")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--bbox-min", gen.bbox_min_nm, "Smallest bounding-box long side (nm)");
    sub->add_option("--bbox-max", gen.bbox_max_nm, "Largest bounding-box long side (nm)");
    sub->add_option("--coord-grid", gen.coord_grid, "Integer grid for terminal placement");
    sub->add_option("--tech", gen.tech, "Technology profile JSON (built-in default if omitted)");
    sub->add_option("--out", gen.out, "Corpus JSONL")->required();
    sub->add_option("--manifest", gen.manifest, "Manifest path (default <out>.manifest.json)");
    sub->callback([&] { run = [&] { return run_gen(ctx, gen); }; });
  }
  LabelOptions label;
  {
    CLI::App* sub = command("label", "Label nets with the simulation oracle Ceff");
    sub->add_option("--in", label.in, "Net corpus JSONL")->required();
    sub->add_option("--out", label.out, "Label JSONL")->required();
    sub->add_option("--spice-dir", label.spice_dir, "Also write one SPICE deck per net here");
    add_driver_overrides(sub, label.driver);
    sub->callback([&] { run = [&] { return run_label(ctx, label); }; });
  }
  ReduceOptions reduce;
  {
    CLI::App* sub = command("reduce", "Reduce nets to pi models");
    sub->add_option("--in", reduce.in, "Net corpus JSONL")->required();
    sub->add_option("--out", reduce.out, "Pi model JSONL")->required();
    add_driver_overrides(sub, reduce.driver);
    sub->callback([&] { run = [&] { return run_reduce(ctx, reduce); }; });
  }
  CeffOptions ceff_opts;
  {
    CLI::App* sub = command("ceff", "Compute effective capacitance per net");
    sub->add_option("--in", ceff_opts.in, "Net corpus JSONL")->required();
    sub->add_option("--out", ceff_opts.out, "Result JSONL")->required();
    sub->add_option("--method", ceff_opts.method, "dartu or oracle")
        ->check(CLI::IsMember({"dartu", "oracle"}));
    add_driver_overrides(sub, ceff_opts.driver);
    sub->callback([&] { run = [&] { return run_ceff(ctx, ceff_opts); }; });
  }
  SimulateOptions simulate;
  {
    CLI::App* sub = command("simulate", "Transient simulation of each net");
    sub->add_option("--in", simulate.in, "Net corpus JSONL")->required();
    sub->add_option("--out", simulate.out, "Result JSONL")->required();
    sub->add_flag("--waveforms", simulate.waveforms, "Include the driver-output waveform");
    add_driver_overrides(sub, simulate.driver);
    sub->callback([&] { run = [&] { return run_simulate(ctx, simulate); }; });
  }
  ExportOptions exp;
  {
    CLI::App* sub = command("export-graphs", "Build labelled GNN graphs and split them into train/test");
    sub->add_option("--in", exp.in, "Net corpus JSONL")->required();
    sub->add_option("--labels", exp.labels, "Label JSONL from `label`")->required();
    auto* split = sub->add_option("--split", exp.split, "Corpus manifest from `gen`");
    sub->add_option("--train-fraction", exp.train_fraction, "Seeded per-net split when no manifest is given")
        ->check(CLI::Range(0.0, 1.0))
        ->excludes(split);
    sub->add_option("--out-dir", exp.out_dir, "Dataset directory")->required();
    sub->add_flag("--bidirectional", exp.bidirectional, "Store reverse edges as well");
    sub->callback([&] { run = [&] { return run_export(ctx, exp); }; });
  }
  InferOptions infer;
  {
    CLI::App* sub = command("infer", "Predict Ceff ratios with a GAT weight bundle");
    sub->add_option("--weights", infer.weights, "Weight bundle")->required();
    sub->add_option("--in", infer.in, "Graph JSONL")->required();
    sub->add_option("--out", infer.out, "Prediction JSONL")->required();
    sub->add_option("--batch", infer.batch, "Graphs per batch")->check(CLI::PositiveNumber);
    sub->add_flag("--check-invariants", infer.check_invariants, "Assert attention and pooling weights sum to one");
    sub->callback([&] { run = [&] { return run_infer(ctx, infer); }; });
  }
  EvalOptions eval;
  {
    CLI::App* sub = command("eval", "Score predictions against labels");
    sub->add_option("--pred", eval.pred, "Prediction JSONL (name, ceff_f)")->required();
    sub->add_option("--labels", eval.labels, "Label JSONL (name, ceff_f)")->required();
    sub->add_option("--baseline", eval.baseline, "Baseline JSONL (name, ceff_f, failed) for cohort split");
    sub->add_option("--out", eval.out, "Metrics JSON");
    sub->callback([&] { run = [&] { return run_eval(ctx, eval); }; });
  }
  BenchOptions bench;
  {
    CLI::App* sub = command("bench", "Throughput of Dartu against batched GAT inference");
    sub->add_option("--corpus", bench.corpus, "Net corpus JSONL")->required();
    sub->add_option("--weights", bench.weights, "Weight bundle")->required();
    sub->add_option("--out", bench.out, "Benchmark JSON");
    sub->add_option("--batch", bench.batch, "Graphs per inference batch")->check(CLI::PositiveNumber);
    sub->add_option("--repeat", bench.repeat, "Timed repetitions; the median is reported")
        ->check(CLI::PositiveNumber);
    sub->add_option("--limit", bench.limit, "Use only the first N nets");
    sub->callback([&] { run = [&] { return run_bench(ctx, bench); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  const CLI::App* sub = app.get_subcommands().front();
  ctx.command = sub->get_name();
  ctx.config = effective_config(app, *sub);

  json report = provenance(ctx);
  report["command"] = ctx.command;
  report["config"] = ctx.config;
  int code = kOk;
  const auto start = std::chrono::steady_clock::now();
  try {
    report["result"] = run();
    report["status"] = "ok";
  } catch (const Error& e) {
    code = exit_code(e.kind());
    report["status"] = "error";
    report["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    code = kNumeric;
    report["status"] = "error";
    report["error"] = {{"kind", "Internal"}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << '\n';
  }
  report["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::cout << report.dump() << '\n';
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << report.dump(2) << '\n';
    if (!out) {
      std::cerr << "error: cannot write report " << report_path << '\n';
      return code == kOk ? kIo : code;
    }
  }
  return code;
}
