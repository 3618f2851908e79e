#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <vector>

#include "ceff/dartu.hpp"
#include "ceff/error.hpp"
#include "ceff/gat.hpp"
#include "ceff/gnn_graph.hpp"
#include "ceff/hash.hpp"
#include "ceff/metrics.hpp"
#include "ceff/net_io.hpp"
#include "ceff/netgen.hpp"
#include "ceff/parallel.hpp"
#include "ceff/pi_model.hpp"
#include "ceff/rng.hpp"
#include "ceff/transient.hpp"
#include "ceff/version.hpp"

namespace ceff::cli {

using json = nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + path);
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

// JSONL artifacts keep their documented line format; provenance goes to a sidecar.
void write_sidecar(const RunContext& ctx, const std::string& path, std::size_t lines) {
  json meta = provenance(ctx);
  meta["command"] = ctx.command;
  meta["config"] = ctx.config;
  meta["lines"] = lines;
  auto out = open_out(path + ".meta.json");
  out << meta.dump(2) << '\n';
  finish_out(out, path + ".meta.json");
}

void for_each_json_line(const std::string& path, const std::function<void(const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::MalformedDocument, path + ":" + std::to_string(number) + ": " + e.what());
    }
    fn(j);
  }
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorKind::MalformedDocument, where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::MalformedDocument, where + ": bad \"" + key + "\"");
  }
}

// Re-raises a per-net error with the net name in front of the message.
template <class Fn>
auto on_net(const RcNetwork& net, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    const std::string what = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    throw Error(e.kind(), "net " + net.name + ": " + (what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what));
  }
}

std::vector<RcNetwork> load_nets(const std::string& path, const DriverOverrides& driver) {
  std::vector<RcNetwork> nets = read_network_corpus(path);
  for (RcNetwork& net : nets) {
    if (driver.v_low) net.driver.v_low_frac = *driver.v_low;
    if (driver.v_high) net.driver.v_high_frac = *driver.v_high;
    if (driver.v_low || driver.v_high) on_net(net, [&] { validate(net); return 0; });
  }
  return nets;
}

// Maps every net through `fn` on the worker pool and writes one JSON line per net in input order.
std::size_t map_to_jsonl(const RunContext& ctx, const std::vector<RcNetwork>& nets, const std::string& path,
                         const std::function<json(const RcNetwork&)>& fn) {
  auto out = open_out(path);
  parallel_for_ordered(
      nets.size(), ctx.workers, [&](std::size_t i) { return on_net(nets[i], [&] { return fn(nets[i]).dump(); }); },
      [&](std::size_t, std::string&& line) { out << line << '\n'; });
  finish_out(out, path);
  write_sidecar(ctx, path, nets.size());
  return nets.size();
}

std::pair<int, int> parse_degrees(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const int d = std::stoi(text);
      return {d, d};
    }
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::MalformedDocument, "degrees must look like 3:50, got '" + text + "'");
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class Fn>
double median_seconds(int repeat, Fn&& fn) {
  std::vector<double> times;
  for (int r = 0; r < std::max(1, repeat); ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    times.push_back(seconds_since(start));
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

json provenance(const RunContext& ctx) {
  return {{"tool_version", kToolVersion}, {"seed", ctx.seed}, {"config_hash", sha256_hex(ctx.config.dump())}};
}

json run_gen(const RunContext& ctx, const GenOptions& o) {
  GenSpec spec;
  std::tie(spec.degree_min, spec.degree_max) = parse_degrees(o.degrees);
  spec.nets_per_degree = o.per_degree;
  spec.train_fraction = o.train_fraction;
  spec.bbox_long_side = {o.bbox_min_nm, o.bbox_max_nm};
  spec.coord_grid = o.coord_grid;
  spec.seed = ctx.seed;
  const TechProfile tech = o.tech.empty() ? default_tech_profile() : load_tech_profile(o.tech);

  auto out = open_out(o.out);
  json manifest = generate_dataset(spec, tech, out, ctx.workers);
  finish_out(out, o.out);
  const std::string manifest_path = o.manifest.empty() ? o.out + ".manifest.json" : o.manifest;
  auto mout = open_out(manifest_path);
  mout << manifest.dump(2) << '\n';
  finish_out(mout, manifest_path);
  return {{"corpus", o.out}, {"manifest", manifest_path}, {"counts", manifest["counts"]},
          {"corpus_config_hash", manifest["config_hash"]}};
}

json run_label(const RunContext& ctx, const LabelOptions& o) {
  const auto nets = load_nets(o.in, o.driver);
  if (!o.spice_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(o.spice_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + o.spice_dir);
  }
  const std::size_t n = map_to_jsonl(ctx, nets, o.out, [&](const RcNetwork& net) {
    const CeffResult r = oracle_ceff(net);
    const double total = total_capacitance(net);
    if (!o.spice_dir.empty()) {
      const std::string path = o.spice_dir + "/" + net.name + ".sp";
      auto deck = open_out(path);
      write_spice_deck(net, deck);
      finish_out(deck, path);
    }
    return json{{"name", net.name}, {"ceff_f", r.ceff}, {"ctotal_f", total}, {"ratio", r.ceff / total}, {"t50_s", r.t50}};
  });
  return {{"nets", n}, {"out", o.out}};
}

json run_reduce(const RunContext& ctx, const ReduceOptions& o) {
  const auto nets = load_nets(o.in, o.driver);
  std::atomic<std::size_t> degenerate{0};
  const std::size_t n = map_to_jsonl(ctx, nets, o.out, [&](const RcNetwork& net) {
    const PiModel pi = reduce_network(net);
    if (pi.degenerate) ++degenerate;
    return json{{"name", net.name}, {"c1_f", pi.c1}, {"c2_f", pi.c2}, {"rpi_ohm", pi.r_pi}, {"degenerate", pi.degenerate}};
  });
  return {{"nets", n}, {"degenerate", degenerate.load()}, {"out", o.out}};
}

json run_ceff(const RunContext& ctx, const CeffOptions& o) {
  if (o.method != "dartu" && o.method != "oracle")
    throw Error(ErrorKind::MalformedDocument, "unknown method " + o.method);
  const bool oracle = o.method == "oracle";
  const auto nets = load_nets(o.in, o.driver);
  std::atomic<std::size_t> failed{0};
  const std::size_t n = map_to_jsonl(ctx, nets, o.out, [&](const RcNetwork& net) {
    const CeffResult r = oracle ? oracle_ceff(net) : compute_ceff_dartu(net);
    if (r.failed) ++failed;
    return json{{"name", net.name}, {"ceff_f", r.ceff}, {"failed", r.failed}, {"iterations", r.iterations}};
  });
  return {{"nets", n},
          {"method", o.method},
          {"failed", failed.load()},
          {"fail_percent", n == 0 ? 0.0 : 100.0 * static_cast<double>(failed.load()) / static_cast<double>(n)},
          {"out", o.out}};
}

json run_simulate(const RunContext& ctx, const SimulateOptions& o) {
  const auto nets = load_nets(o.in, o.driver);
  const std::size_t n = map_to_jsonl(ctx, nets, o.out, [&](const RcNetwork& net) {
    TransientOptions opts;
    opts.record_waveforms = o.waveforms;
    const TransientResult r = simulate(net, opts);
    json j{{"name", net.name},
           {"t50_s", r.t50_root},
           {"step_s", r.step},
           {"horizon_s", r.horizon},
           {"delivered_charge_c", r.delivered_charge}};
    if (o.waveforms) {
      std::vector<double> root;
      root.reserve(r.node_voltages.size());
      for (const auto& v : r.node_voltages) root.push_back(v.front());
      j["times_s"] = r.times;
      j["v_root_v"] = root;
    }
    return j;
  });
  return {{"nets", n}, {"out", o.out}};
}

json run_export(const RunContext& ctx, const ExportOptions& o) {
  const auto nets = load_nets(o.in, {});

  std::map<std::string, double> labels;
  for_each_json_line(o.labels, [&](const json& j) {
    labels[field<std::string>(j, "name", o.labels)] = field<double>(j, "ceff_f", o.labels);
  });

  std::set<std::string> train;
  if (!o.split.empty()) {
    std::ifstream in(o.split);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + o.split);
    json manifest;
    try {
      manifest = json::parse(in);
      for (const auto& d : manifest.at("split").at("per_degree"))
        for (const auto& index : d.at("train"))
          train.insert(synthetic_net_name(d.at("degree").get<int>(), index.get<std::int64_t>()));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::MalformedDocument, o.split + ": " + e.what());
    }
  } else if (o.train_fraction) {
    for (std::size_t i = 0; i < nets.size(); ++i)
      if (KeyedRng(ctx.seed, 0, i, 1).uniform() < *o.train_fraction) train.insert(nets[i].name);
  }

  GraphOptions gopts;
  gopts.bidirectional = o.bidirectional;
  DatasetWriter writer(o.out_dir);
  parallel_for_ordered(
      nets.size(), ctx.workers,
      [&](std::size_t i) {
        return on_net(nets[i], [&] {
          GnnGraph g = to_gnn_graph(nets[i], gopts);
          auto it = labels.find(nets[i].name);
          if (it == labels.end()) throw Error(ErrorKind::MissingLabel, "no label in " + o.labels);
          return attach_label(std::move(g), it->second);
        });
      },
      [&](std::size_t i, GnnGraph&& g) { writer.write(g, train.count(nets[i].name) > 0); });

  json extra = provenance(ctx);
  extra["graph_options"] = {{"bidirectional", o.bidirectional}};
  extra["split_rule"] = !o.split.empty()    ? "corpus manifest"
                        : o.train_fraction ? "seeded per-net draw with probability train_fraction"
                                           : "all test";
  const json manifest = writer.finish(extra);
  return {{"out_dir", o.out_dir}, {"counts", manifest["counts"]}};
}

json run_infer(const RunContext& ctx, const InferOptions& o) {
  const GatModel model(load_weights(o.weights));
  const std::vector<GnnGraph> graphs = read_graphs(o.in);
  PredictOptions popts;
  popts.batch_graphs = o.batch;
  popts.workers = ctx.workers;
  popts.check_invariants = o.check_invariants;
  const auto start = std::chrono::steady_clock::now();
  const auto predictions = model.predict(graphs, popts);
  const double elapsed = seconds_since(start);

  auto out = open_out(o.out);
  for (const Prediction& p : predictions)
    out << json{{"name", p.name}, {"ratio", p.ratio}, {"ceff_f", p.ceff}}.dump() << '\n';
  finish_out(out, o.out);
  write_sidecar(ctx, o.out, predictions.size());
  return {{"graphs", predictions.size()},
          {"out", o.out},
          {"inference_s", elapsed},
          {"graphs_per_s", elapsed > 0 ? static_cast<double>(predictions.size()) / elapsed : 0.0}};
}

json run_eval(const RunContext& ctx, const EvalOptions& o) {
  std::vector<std::string> names;
  std::vector<double> predicted;
  for_each_json_line(o.pred, [&](const json& j) {
    names.push_back(field<std::string>(j, "name", o.pred));
    predicted.push_back(field<double>(j, "ceff_f", o.pred));
  });
  std::map<std::string, double> label_by_name;
  for_each_json_line(o.labels, [&](const json& j) {
    label_by_name[field<std::string>(j, "name", o.labels)] = field<double>(j, "ceff_f", o.labels);
  });
  std::map<std::string, std::pair<double, bool>> base_by_name;
  if (!o.baseline.empty())
    for_each_json_line(o.baseline, [&](const json& j) {
      base_by_name[field<std::string>(j, "name", o.baseline)] = {field<double>(j, "ceff_f", o.baseline),
                                                                 field<bool>(j, "failed", o.baseline)};
    });

  const auto mismatch = [&](const std::string& file, std::size_t count) {
    return Error(ErrorKind::LengthMismatch, o.pred + " has " + std::to_string(names.size()) + " entries, " + file +
                                                " has " + std::to_string(count));
  };
  if (label_by_name.size() != names.size()) throw mismatch(o.labels, label_by_name.size());
  if (!o.baseline.empty() && base_by_name.size() != names.size()) throw mismatch(o.baseline, base_by_name.size());

  std::vector<double> label, base;
  std::vector<char> failed;
  for (const std::string& name : names) {
    auto it = label_by_name.find(name);
    if (it == label_by_name.end()) throw Error(ErrorKind::LengthMismatch, name + " has no entry in " + o.labels);
    label.push_back(it->second);
    if (!o.baseline.empty()) {
      auto b = base_by_name.find(name);
      if (b == base_by_name.end()) throw Error(ErrorKind::LengthMismatch, name + " has no entry in " + o.baseline);
      base.push_back(b->second.first);
      failed.push_back(b->second.second);
    }
  }
  std::optional<BaselineResults> baseline;
  const auto flags = std::make_unique<bool[]>(failed.size());
  std::copy(failed.begin(), failed.end(), flags.get());
  if (!o.baseline.empty()) baseline = BaselineResults{base, std::span<const bool>(flags.get(), failed.size())};

  json report = to_json(evaluate(predicted, label, baseline));
  report["nets"] = names.size();
  if (!o.out.empty()) {
    json doc = report;
    doc.update(provenance(ctx));
    auto out = open_out(o.out);
    out << doc.dump(2) << '\n';
    finish_out(out, o.out);
  }
  return report;
}

json run_bench(const RunContext& ctx, const BenchOptions& o) {
  std::vector<RcNetwork> nets = read_network_corpus(o.corpus);
  if (o.limit && nets.size() > *o.limit) nets.resize(*o.limit);
  if (nets.empty()) throw Error(ErrorKind::MalformedDocument, o.corpus + " holds no nets");
  const GatModel model(load_weights(o.weights));
  const auto count = static_cast<double>(nets.size());

  std::vector<GnnGraph> graphs;
  const double build_s = median_seconds(o.repeat, [&] {
    graphs = parallel_map(nets.size(), 1, [&](std::size_t i) { return to_gnn_graph(nets[i]); });
  });

  std::size_t failed = 0;
  const double serial_s = median_seconds(o.repeat, [&] {
    failed = 0;
    for (const RcNetwork& net : nets) failed += compute_ceff_dartu(net).failed ? 1 : 0;
  });
  const double parallel_s = median_seconds(o.repeat, [&] {
    parallel_map(nets.size(), ctx.workers, [&](std::size_t i) { return compute_ceff_dartu(nets[i]).ceff; });
  });
  PredictOptions popts;
  popts.batch_graphs = o.batch;
  popts.workers = ctx.workers;
  const double gnn_s = median_seconds(o.repeat, [&] { model.predict(graphs, popts); });

  const json throughput = {{"dartu_serial", count / serial_s},
                           {"dartu_parallel", count / parallel_s},
                           {"gnn_batch", count / gnn_s},
                           {"graph_build", count / build_s},
                           {"gnn_with_graph_build", count / (gnn_s + build_s)}};
  json report = {{"nets", nets.size()},
                 {"workers", ctx.workers},
                 {"batch", o.batch},
                 {"repeat", o.repeat},
                 {"dartu_failed", failed},
                 {"seconds", {{"dartu_serial", serial_s}, {"dartu_parallel", parallel_s}, {"gnn_batch", gnn_s},
                              {"graph_build", build_s}}},
                 {"nets_per_s", throughput},
                 {"ratio_gnn_batch_over_dartu_serial", serial_s / gnn_s}};
  if (!o.out.empty()) {
    json doc = report;
    doc.update(provenance(ctx));
    auto out = open_out(o.out);
    out << doc.dump(2) << '\n';
    finish_out(out, o.out);
  }
  return report;
}

}  // namespace ceff::cli
