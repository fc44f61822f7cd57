// Command-line driver: generate, sample, bench, noise.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stgen/dataset.hpp"
#include "stgen/error.hpp"
#include "stgen/field_series.hpp"
#include "stgen/manifest.hpp"
#include "stgen/mesh.hpp"
#include "stgen/pde_advection.hpp"
#include "stgen/pde_si.hpp"
#include "stgen/pde_wave.hpp"
#include "stgen/probe_graph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stgen;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(slurp(p));
  } catch (const json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

// A config path is a scenario object, an object with a "scenarios" array, or
// a directory of such files (read in filename order).
std::vector<json> load_scenarios(const std::vector<std::string>& paths) {
  std::vector<json> out;
  auto load_one = [&out](const fs::path& p) {
    const auto j = parse_json_file(p);
    if (j.is_object() && j.contains("scenarios")) {
      for (const auto& s : j.at("scenarios")) out.push_back(s);
    } else if (j.is_object()) {
      out.push_back(j);
    } else {
      throw ParseError(p.string() + ": expected a scenario object");
    }
  };
  for (const auto& raw : paths) {
    const fs::path p(raw);
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) load_one(f);
    } else if (fs::exists(p)) {
      load_one(p);
    } else {
      throw ParseError("config not found: " + p.string());
    }
  }
  if (out.empty()) throw ParseError("no scenarios found in the given config paths");
  return out;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. The error of the
// lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string pde;
  std::vector<std::string> configs;
  std::string mesh;
  std::string out;
  std::size_t jobs = 1;
  std::optional<std::size_t> steps;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "generate";
  manifest.configs = a.configs;
  manifest.seeds = {a.seed};

  const Mesh mesh = read_msh(a.mesh);
  const auto configs = load_scenarios(a.configs);
  manifest.stages.emplace_back("load", clock.lap());

  const fs::path out(a.out);
  fs::create_directories(out);
  std::vector<std::string> ids(configs.size());
  std::vector<fs::path> stems(configs.size());

  auto check_kind = [&](const json& j) {
    const auto kind = j.value("kind", a.pde);
    if (kind != a.pde) throw ParseError("scenario kind '" + kind + "' does not match --pde " + a.pde);
  };

  parallel_for(configs.size(), a.jobs, [&](std::size_t i) {
    const auto& cfg = configs[i];
    check_kind(cfg);
    FieldSeries series;
    if (a.pde == "si") {
      auto scen = cfg.get<SiScenario>();
      if (a.steps) scen.steps = *a.steps;
      series = run_si_scenario(mesh, scen);
    } else if (a.pde == "advection") {
      auto scen = cfg.get<AdvScenario>();
      if (a.steps) {
        if (*a.steps == 0 || *a.steps % scen.steps_per_block != 0 || *a.steps > scen.total_steps()) {
          throw UsageError("--steps for advection must be a positive multiple of steps_per_block up to " +
                           std::to_string(scen.total_steps()));
        }
        scen.blocks.resize(*a.steps / scen.steps_per_block);
      }
      series = run_advection(mesh, scen);
    } else {
      auto scen = cfg.get<WaveScenario>();
      if (a.steps) scen.steps = *a.steps;
      series = run_wave(mesh, scen);
    }
    ids[i] = series.id;
    stems[i] = out / ("scenario_" + series.id);
    write_series(series, stems[i]);
  });
  manifest.stages.emplace_back("solve", clock.lap());

  std::vector<std::string> seen = ids;
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) throw ParseError("duplicate scenario ids");

  json series_list = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto header = fs::path(stems[i].string() + ".series.json");
    const auto payload = fs::path(stems[i].string() + ".series.f64");
    manifest.add_output(out, header);
    manifest.add_output(out, payload);
    series_list.push_back(header.filename().string());
  }
  manifest.parameters = {{"pde", a.pde}, {"mesh", fs::absolute(a.mesh).string()}, {"series", series_list}};
  if (a.steps) manifest.parameters["steps"] = *a.steps;
  manifest.stages.emplace_back("hash", clock.lap());
  write_manifest(manifest, out / "manifest.json");
  std::cout << "generated " << ids.size() << " series in " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string series_dir;
  std::string mesh;
  std::string points;
  std::string adjacency;
  std::string out;
  std::size_t segment_length = 0;
  std::size_t first_state = 1;
  bool no_normalize = false;
  bool values_csv = false;
};

std::vector<fs::path> series_headers(const fs::path& dir, std::string& mesh_hint) {
  std::vector<fs::path> out;
  const auto manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    const auto j = parse_json_file(manifest);
    const auto params = j.value("parameters", json::object());
    mesh_hint = params.value("mesh", std::string{});
    for (const auto& name : params.value("series", json::array())) out.push_back(dir / name.get<std::string>());
  }
  if (out.empty()) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.size() > 12 && name.ends_with(".series.json")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
  }
  if (out.empty()) throw ParseError("no series found in " + dir.string());
  return out;
}

int cmd_sample(const SampleArgs& a) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "sample";

  std::string mesh_hint;
  const auto headers = series_headers(a.series_dir, mesh_hint);
  const std::string mesh_path = a.mesh.empty() ? mesh_hint : a.mesh;
  if (mesh_path.empty()) throw UsageError("--mesh is required when the series directory has no manifest");
  const Mesh mesh = read_msh(mesh_path);
  const PointSet points = read_points_csv(a.points);
  const ProbeMap pm = locate_points(mesh, points);

  Graph graph;
  if (a.adjacency == "delaunay") {
    graph = build_graph_delaunay(points);
  } else if (a.adjacency.starts_with("pairs:")) {
    const auto pairs = read_pairs_csv(a.adjacency.substr(6));
    graph = build_graph_adjacency(points, pairs);
  } else {
    throw UsageError("--adjacency must be 'delaunay' or 'pairs:<csv>'");
  }
  manifest.stages.emplace_back("graph", clock.lap());

  TemporalGraphDataset ds;
  ds.graph = std::move(graph);
  ds.segments = {0};
  std::vector<Tensor3> parts;
  std::size_t total = 0;
  std::size_t d = 0;
  json sources = json::array();
  for (const auto& h : headers) {
    const auto series = read_series(h);
    if (series.node_count != mesh.node_count()) {
      throw ParseError(h.string() + ": series has " + std::to_string(series.node_count) + " nodes, mesh has " +
                       std::to_string(mesh.node_count()));
    }
    if (d == 0) {
      d = series.components;
      ds.components = series.meta.value("components", std::vector<std::string>{});
    } else if (d != series.components) {
      throw ParseError(h.string() + ": component count differs from earlier series");
    }
    auto t = sample_series(series, pm, std::min(a.first_state, series.size()));
    if (t.t == 0) continue;
    const std::size_t seg = a.segment_length == 0 ? t.t : a.segment_length;
    if (t.t % seg != 0) {
      throw UsageError(h.string() + ": " + std::to_string(t.t) + " sampled states are not a multiple of --segment-length " +
                       std::to_string(seg));
    }
    for (std::size_t k = seg; k <= t.t; k += seg) ds.segments.push_back(total + k);
    total += t.t;
    sources.push_back(series.id);
    parts.push_back(std::move(t));
  }
  if (total == 0) throw ParseError("series contain no states to sample");
  ds.values = Tensor3(total, points.size(), d);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.data.begin(), p.data.end(), ds.values.data.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.data.size();
  }
  parts.clear();
  ds.meta = {{"series", sources}, {"adjacency", a.adjacency.starts_with("pairs:") ? "pairs" : "delaunay"}};
  if (!a.no_normalize) ds = normalize(std::move(ds));
  manifest.stages.emplace_back("sample", clock.lap());

  const fs::path out(a.out);
  write_dataset(ds, out, a.values_csv);
  for (const char* f : {"dataset.stg.json", "dataset.stg.f32", "nodes.csv", "edges.csv"}) manifest.add_output(out, out / f);
  if (a.values_csv) manifest.add_output(out, out / "values.csv");
  manifest.configs = {a.points};
  manifest.parameters = {{"series_dir", a.series_dir},
                         {"mesh", mesh_path},
                         {"adjacency", a.adjacency},
                         {"segment_length", a.segment_length},
                         {"normalized", !a.no_normalize}};
  manifest.stages.emplace_back("write", clock.lap());
  write_manifest(manifest, out / "manifest.json");
  std::cout << "dataset [" << ds.values.t << ", " << ds.values.n << ", " << ds.values.d << "] with "
            << ds.graph.edges.size() << " directed edges written to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string dataset;
  std::string task = "forecast";
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
  int feature = -1;
  std::size_t m = 14;
  std::size_t n = 14;
  std::size_t stride = 1;
  std::optional<double> sigma;
  std::optional<double> rate;
};

NoiseSpec noise_from(const std::string& config, std::optional<double> sigma, std::optional<double> rate,
                     NoiseSpec::Kind kind, std::uint64_t seed) {
  NoiseSpec spec;
  if (!config.empty()) {
    auto j = parse_json_file(config);
    if (!j.contains("kind")) j["kind"] = kind == NoiseSpec::Kind::gaussian ? "gaussian" : "dropout";
    spec = j.get<NoiseSpec>();
  }
  spec.kind = kind;
  spec.seed = seed;
  if (sigma) spec.sigma = *sigma;
  if (rate) spec.rate = *rate;
  spec.validate();
  return spec;
}

// Tensor restricted to rows [begin, end) and one component (or all when feature < 0).
Tensor3 select(const Tensor3& x, std::size_t begin, std::size_t end, int feature) {
  const std::size_t d = feature < 0 ? x.d : 1;
  Tensor3 out(end - begin, x.n, d);
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t j = 0; j < x.n; ++j) {
      for (std::size_t c = 0; c < d; ++c) {
        out(t - begin, j, c) = x(t, j, feature < 0 ? c : static_cast<std::size_t>(feature));
      }
    }
  }
  return out;
}

int cmd_bench(const BenchArgs& a) {
  Stopwatch clock;
  const auto ds = read_dataset(a.dataset);
  if (a.feature >= static_cast<int>(ds.values.d)) {
    throw UsageError("--feature " + std::to_string(a.feature) + " out of range for d = " + std::to_string(ds.values.d));
  }
  const auto parts = split(ds.segments);
  const auto& test = parts.test;
  const Tensor3 clean = select(ds.values, test.begin, test.end, a.feature);

  std::optional<NoiseSpec> noise;
  if (a.task == "stability-gauss" || a.task == "denoise-gauss") {
    noise = noise_from(a.config, a.sigma, a.rate, NoiseSpec::Kind::gaussian, a.seed);
  } else if (a.task == "stability-dropout" || a.task == "denoise-dropout") {
    noise = noise_from(a.config, a.sigma, a.rate, NoiseSpec::Kind::dropout, a.seed);
  }
  // Stability and denoising both perturb the test contexts; denoising also
  // perturbs training contexts, which the repetition baseline never reads.
  const Tensor3 contexts = noise ? add_noise(clean, *noise) : clean;

  SplitPart local = test;
  for (auto& s : local.segments) s -= test.begin;
  local.begin = 0;
  local.end = test.length();
  const auto origins = window_origins(local, a.m, a.n, a.stride);
  if (origins.empty()) throw UsageError("test part has no complete windows");
  RmseAccumulator acc;
  for (auto o : origins) {
    const auto pred = repetition_forecast(slice_rows(contexts, o, a.m), a.n);
    acc.add(pred, slice_rows(clean, o + a.m, a.n));
  }
  const double total = acc.rmse();
  const auto horizon = acc.per_horizon();

  json metrics;
  metrics["task"] = a.task;
  metrics["model"] = "repetition";
  metrics["seed"] = a.seed;
  metrics["rmse"] = total;
  metrics["rmse_x100"] = 100.0 * total;
  metrics["windows"] = origins.size();
  metrics["m"] = a.m;
  metrics["n"] = a.n;
  metrics["stride"] = a.stride;
  metrics["feature"] = a.feature;
  metrics["test_range"] = {test.begin, test.end};
  metrics["rmse_per_horizon"] = horizon;
  if (noise) metrics["noise"] = *noise;

  const fs::path out(a.out);
  fs::create_directories(out);
  write_file_atomic(out / "metrics.json", metrics.dump(2) + "\n");
  std::string csv = "horizon,rmse\n";
  for (std::size_t s = 0; s < horizon.size(); ++s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", s + 1, horizon[s]);
    csv += buf;
  }
  write_file_atomic(out / "horizon.csv", csv);

  RunManifest manifest;
  manifest.command = "bench";
  manifest.configs = {a.dataset};
  if (!a.config.empty()) manifest.configs.push_back(a.config);
  manifest.seeds = {a.seed};
  manifest.parameters = {{"task", a.task}, {"feature", a.feature}, {"m", a.m}, {"n", a.n}, {"stride", a.stride}};
  manifest.stages.emplace_back("bench", clock.lap());
  manifest.add_output(out, out / "metrics.json");
  manifest.add_output(out, out / "horizon.csv");
  write_manifest(manifest, out / "manifest.json");
  std::cout << a.task << " repetition rmse " << total << " over " << origins.size() << " windows\n";
  return 0;
}

// ---------------------------------------------------------------------------
// noise

struct NoiseArgs {
  std::string dataset;
  std::string out;
  std::string kind = "gaussian";
  std::string part = "test";
  std::string config;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  std::optional<double> rate;
  bool values_csv = false;
};

int cmd_noise(const NoiseArgs& a) {
  Stopwatch clock;
  auto ds = read_dataset(a.dataset);
  const auto kind = a.kind == "gaussian" ? NoiseSpec::Kind::gaussian : NoiseSpec::Kind::dropout;
  const auto spec = noise_from(a.config, a.sigma, a.rate, kind, a.seed);
  std::size_t begin = 0;
  std::size_t end = ds.values.t;
  if (a.part != "all") {
    const auto parts = split(ds.segments);
    const SplitPart& p = a.part == "train" ? parts.train : a.part == "val" ? parts.val : parts.test;
    begin = p.begin;
    end = p.end;
  }
  const auto noisy = add_noise(slice_rows(ds.values, begin, end - begin), spec);
  std::copy(noisy.data.begin(), noisy.data.end(),
            ds.values.data.begin() + static_cast<std::ptrdiff_t>(begin * ds.values.n * ds.values.d));
  ds.meta["noise"] = spec;
  ds.meta["noise_range"] = {begin, end};

  const fs::path out(a.out);
  write_dataset(ds, out, a.values_csv);
  RunManifest manifest;
  manifest.command = "noise";
  manifest.configs = {a.dataset};
  manifest.seeds = {a.seed};
  manifest.parameters = {{"kind", a.kind}, {"part", a.part}, {"noise", spec}};
  manifest.stages.emplace_back("noise", clock.lap());
  for (const char* f : {"dataset.stg.json", "dataset.stg.f32", "nodes.csv", "edges.csv"}) manifest.add_output(out, out / f);
  if (a.values_csv) manifest.add_output(out, out / "values.csv");
  write_manifest(manifest, out / "manifest.json");
  std::cout << "noisy dataset written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal graph dataset generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Run PDE scenarios and write field series");
  g->add_option("--pde", gen.pde, "si | advection | wave")->required()->check(CLI::IsMember({"si", "advection", "wave"}));
  g->add_option("--config", gen.configs, "Scenario JSON file or directory (repeatable)")->required();
  g->add_option("--mesh", gen.mesh, "Gmsh 2.2 ASCII mesh")->required()->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--jobs", gen.jobs, "Scenarios run in parallel")->check(CLI::PositiveNumber);
  g->add_option("--steps", gen.steps, "Override the number of time steps");
  g->add_option("--seed", gen.seed, "Recorded in the manifest (the solvers are deterministic)");

  SampleArgs smp;
  auto* s = app.add_subcommand("sample", "Evaluate series at probe points and build a graph dataset");
  s->add_option("--series", smp.series_dir, "Directory written by generate")->required()->check(CLI::ExistingDirectory);
  s->add_option("--mesh", smp.mesh, "Mesh (default: the one recorded by generate)");
  s->add_option("--points", smp.points, "Probe CSV with header id,x,y")->required()->check(CLI::ExistingFile);
  s->add_option("--adjacency", smp.adjacency, "delaunay | pairs:<csv>")->required();
  s->add_option("--out", smp.out, "Output dataset directory")->required();
  s->add_option("--segment-length", smp.segment_length, "Split each series into segments of this many states");
  s->add_option("--first-state", smp.first_state, "First state sampled from each series (0 keeps the initial state)");
  s->add_flag("--no-normalize", smp.no_normalize, "Keep raw values");
  s->add_flag("--values-csv", smp.values_csv, "Also write values.csv");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Evaluate the repetition baseline on a benchmark task");
  b->add_option("--dataset", bn.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  b->add_option("--task", bn.task, "Benchmark task")
      ->check(CLI::IsMember({"forecast", "stability-gauss", "stability-dropout", "denoise-gauss", "denoise-dropout"}));
  b->add_option("--out", bn.out, "Output directory")->required();
  b->add_option("--config", bn.config, "Noise spec JSON")->check(CLI::ExistingFile);
  b->add_option("--seed", bn.seed, "Noise seed");
  b->add_option("--feature", bn.feature, "Component to evaluate (-1 = all)");
  b->add_option("--context", bn.m, "Context length m")->check(CLI::PositiveNumber);
  b->add_option("--horizon", bn.n, "Forecast length n")->check(CLI::PositiveNumber);
  b->add_option("--stride", bn.stride, "Window stride")->check(CLI::PositiveNumber);
  b->add_option("--sigma", bn.sigma, "Gaussian noise standard deviation");
  b->add_option("--rate", bn.rate, "Dropout fraction");

  NoiseArgs nz;
  auto* z = app.add_subcommand("noise", "Write a copy of a dataset with noise added");
  z->add_option("--dataset", nz.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  z->add_option("--out", nz.out, "Output dataset directory")->required();
  z->add_option("--kind", nz.kind, "gaussian | dropout")->check(CLI::IsMember({"gaussian", "dropout"}));
  z->add_option("--part", nz.part, "train | val | test | all")->check(CLI::IsMember({"train", "val", "test", "all"}));
  z->add_option("--config", nz.config, "Noise spec JSON")->check(CLI::ExistingFile);
  z->add_option("--seed", nz.seed, "Noise seed");
  z->add_option("--sigma", nz.sigma, "Gaussian noise standard deviation");
  z->add_option("--rate", nz.rate, "Dropout fraction");
  z->add_flag("--values-csv", nz.values_csv, "Also write values.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_sample(smp);
    if (*b) return cmd_bench(bn);
    if (*z) return cmd_noise(nz);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
