#include "stgen/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "json_util.hpp"
#include "stgen/error.hpp"
#include "text_util.hpp"

namespace stgen {

using nlohmann::json;
using detail::optional_or;
using detail::required;

namespace {

constexpr const char* kHeader = "dataset.stg.json";
constexpr const char* kPayload = "dataset.stg.f32";

}  // namespace

void TemporalGraphDataset::validate() const {
  if (values.n != graph.nodes.size()) throw InvalidArgument("tensor node axis does not match the graph");
  if (values.data.size() != values.t * values.n * values.d) throw InvalidArgument("tensor data has wrong size");
  if (segments.size() < 2 || segments.front() != 0 || segments.back() != values.t) {
    throw InvalidArgument("segment boundaries must start at 0 and end at T");
  }
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i] <= segments[i - 1]) throw InvalidArgument("segment boundaries must increase");
  }
  if (!components.empty() && components.size() != values.d) throw InvalidArgument("component names do not match d");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("normalization scale must be positive");
  for (double v : values.data) {
    if (!std::isfinite(v)) throw InvalidArgument("tensor contains non-finite values");
  }
}

void write_dataset(const TemporalGraphDataset& ds, const std::filesystem::path& dir, bool values_csv) {
  ds.validate();
  std::filesystem::create_directories(dir);
  json h;
  h["format"] = "stgen-dataset";
  h["version"] = 1;
  h["shape"] = {ds.values.t, ds.values.n, ds.values.d};
  h["dtype"] = "float32";
  h["byte_order"] = "little";
  h["layout"] = "T,N,d";
  h["payload"] = kPayload;
  h["normalization"] = {{"normalized", ds.normalized}, {"scale", ds.scale}};
  h["segments"] = ds.segments;
  h["components"] = ds.components;
  h["nodes"] = "nodes.csv";
  h["edges"] = "edges.csv";
  h["meta"] = ds.meta;

  std::vector<float> buf(ds.values.data.size());
  std::transform(ds.values.data.begin(), ds.values.data.end(), buf.begin(),
                 [](double v) { return static_cast<float>(v); });
  {
    std::ofstream out(dir / kPayload, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + (dir / kPayload).string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw ParseError("short write to " + (dir / kPayload).string());
  }
  detail::write_file(dir / "nodes.csv", write_points_csv(ds.graph.nodes));
  detail::write_file(dir / "edges.csv", write_edges_csv(ds.graph));
  if (values_csv) {
    std::string out = "timestep,node,component,value\n";
    for (std::size_t t = 0; t < ds.values.t; ++t) {
      for (std::size_t j = 0; j < ds.values.n; ++j) {
        for (std::size_t c = 0; c < ds.values.d; ++c) {
          out += std::to_string(t) + ',' + detail::csv_field(ds.graph.nodes.ids()[j]) + ',' + std::to_string(c) + ',' +
                 detail::format_double(static_cast<double>(buf[(t * ds.values.n + j) * ds.values.d + c])) + '\n';
        }
      }
    }
    detail::write_file(dir / "values.csv", out);
  }
  detail::write_file(dir / kHeader, h.dump() + "\n");
}

TemporalGraphDataset read_dataset(const std::filesystem::path& dir) {
  const auto header_path = dir / kHeader;
  json h;
  try {
    h = json::parse(detail::read_file(header_path));
  } catch (const json::exception& e) {
    throw ParseError(header_path.string() + ": " + e.what());
  }
  if (optional_or(h, "format", std::string{}) != "stgen-dataset") throw ParseError(header_path.string() + ": not a dataset header");
  if (required<std::string>(h, "dtype") != "float32") throw ParseError(header_path.string() + ": unsupported dtype");
  const auto shape = required<std::vector<std::size_t>>(h, "shape");
  if (shape.size() != 3) throw ParseError(header_path.string() + ": shape must have three axes");

  TemporalGraphDataset ds;
  ds.graph.nodes = read_points_csv(dir / optional_or(h, "nodes", std::string("nodes.csv")));
  ds.graph.edges = parse_edges_csv(detail::read_file(dir / optional_or(h, "edges", std::string("edges.csv"))),
                                   ds.graph.nodes);
  ds.values = Tensor3(shape[0], shape[1], shape[2]);
  ds.segments = required<std::vector<std::size_t>>(h, "segments");
  ds.components = optional_or(h, "components", std::vector<std::string>{});
  const auto norm = optional_or(h, "normalization", json::object());
  ds.scale = optional_or(norm, "scale", 1.0);
  ds.normalized = optional_or(norm, "normalized", false);
  ds.meta = optional_or(h, "meta", json::object());

  const auto payload = dir / optional_or(h, "payload", std::string(kPayload));
  const std::string bytes = detail::read_file(payload);
  const std::size_t expected = ds.values.data.size() * sizeof(float);
  if (bytes.size() != expected) {
    throw ParseError(payload.string() + ": header shape [" + std::to_string(shape[0]) + ", " + std::to_string(shape[1]) +
                     ", " + std::to_string(shape[2]) + "] needs " + std::to_string(expected) + " bytes, found " +
                     std::to_string(bytes.size()) + (bytes.size() < expected ? " (truncated)" : ""));
  }
  std::vector<float> buf(ds.values.data.size());
  std::memcpy(buf.data(), bytes.data(), expected);
  std::transform(buf.begin(), buf.end(), ds.values.data.begin(), [](float v) { return static_cast<double>(v); });
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(header_path.string() + ": " + e.what());
  }
  return ds;
}

TemporalGraphDataset normalize(TemporalGraphDataset ds) {
  double m = 0.0;
  for (double v : ds.values.data) m = std::max(m, std::abs(v));
  if (!(m > 0.0)) throw InvalidArgument("cannot normalize an all-zero tensor");
  for (double& v : ds.values.data) v /= m;
  ds.scale *= m;
  ds.normalized = true;
  return ds;
}

TemporalGraphDataset denormalize(TemporalGraphDataset ds) {
  for (double& v : ds.values.data) v *= ds.scale;
  ds.scale = 1.0;
  ds.normalized = false;
  return ds;
}

DatasetSplit split(const std::vector<std::size_t>& segments, std::array<double, 3> fractions) {
  if (segments.size() < 2) throw InvalidArgument("split needs at least one segment");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw InvalidArgument("split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("split fractions must sum to 1");
  const std::size_t k = segments.size() - 1;
  const auto count = [k](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(k))); };
  const std::size_t n_train = count(fractions[0]);
  const std::size_t n_val = count(fractions[1]);
  if (n_train + n_val > k) throw InvalidArgument("cannot snap split fractions to segment boundaries");
  const std::size_t n_test = k - n_train - n_val;
  const std::array<std::size_t, 3> counts{n_train, n_val, n_test};
  for (std::size_t p = 0; p < 3; ++p) {
    if (fractions[p] > 0.0 && counts[p] == 0) {
      throw InvalidArgument("cannot snap split fractions to " + std::to_string(k) + " segment(s)");
    }
  }
  DatasetSplit out;
  std::size_t s = 0;
  SplitPart* parts[3] = {&out.train, &out.val, &out.test};
  for (std::size_t p = 0; p < 3; ++p) {
    auto& part = *parts[p];
    part.begin = segments[s];
    part.segments.assign(segments.begin() + static_cast<std::ptrdiff_t>(s),
                         segments.begin() + static_cast<std::ptrdiff_t>(s + counts[p] + 1));
    s += counts[p];
    part.end = segments[s];
  }
  return out;
}

std::vector<std::size_t> window_origins(const SplitPart& part, std::size_t m, std::size_t n, std::size_t stride) {
  if (stride == 0) throw InvalidArgument("window stride must be positive");
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < part.segments.size(); ++i) {
    const std::size_t lo = part.segments[i - 1];
    const std::size_t hi = part.segments[i];
    for (std::size_t o = lo; o + m + n <= hi; o += stride) out.push_back(o);
  }
  return out;
}

Tensor3 slice_rows(const Tensor3& x, std::size_t first, std::size_t count) {
  if (first + count > x.t) throw InvalidArgument("row slice out of range");
  Tensor3 out(count, x.n, x.d);
  const std::size_t row = x.n * x.d;
  std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(first * row),
            x.data.begin() + static_cast<std::ptrdiff_t>((first + count) * row), out.data.begin());
  return out;
}

std::vector<WindowSample> windows(const Tensor3& values, const SplitPart& part, std::size_t m, std::size_t n,
                                  std::size_t stride) {
  std::vector<WindowSample> out;
  for (auto o : window_origins(part, m, n, stride)) {
    out.push_back({o, slice_rows(values, o, m), slice_rows(values, o + m, n)});
  }
  return out;
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("noise sigma must be nonnegative");
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1]");
}

void to_json(json& j, const NoiseSpec& s) {
  j = json{{"kind", s.kind == NoiseSpec::Kind::gaussian ? "gaussian" : "dropout"},
           {"sigma", s.sigma},
           {"rate", s.rate},
           {"seed", s.seed},
           {"bernoulli", s.bernoulli}};
}

void from_json(const json& j, NoiseSpec& s) {
  const NoiseSpec d;
  const auto kind = required<std::string>(j, "kind");
  if (kind == "gaussian") {
    s.kind = NoiseSpec::Kind::gaussian;
  } else if (kind == "dropout") {
    s.kind = NoiseSpec::Kind::dropout;
  } else {
    throw ParseError("unknown noise kind '" + kind + "'");
  }
  s.sigma = optional_or(j, "sigma", d.sigma);
  s.rate = optional_or(j, "rate", d.rate);
  s.seed = optional_or(j, "seed", d.seed);
  s.bernoulli = optional_or(j, "bernoulli", d.bernoulli);
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

Tensor3 add_noise(const Tensor3& x, const NoiseSpec& spec) {
  spec.validate();
  Tensor3 out = x;
  std::mt19937_64 rng(spec.seed);
  if (spec.kind == NoiseSpec::Kind::gaussian) {
    if (spec.sigma == 0.0) return out;
    std::normal_distribution<double> dist(0.0, spec.sigma);
    for (double& v : out.data) v += dist(rng);
    return out;
  }
  const std::size_t count = out.data.size();
  if (spec.bernoulli) {
    std::bernoulli_distribution drop(spec.rate);
    for (double& v : out.data) {
      if (drop(rng)) v = 0.0;
    }
    return out;
  }
  const auto k = static_cast<std::size_t>(std::floor(spec.rate * static_cast<double>(count)));
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k positions form a uniform sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, count - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.data[idx[i]] = 0.0;
  }
  return out;
}

void RmseAccumulator::add(const Tensor3& pred, const Tensor3& target) {
  if (pred.shape() != target.shape()) throw InvalidArgument("rmse: window shapes differ");
  if (windows_ == 0) {
    shape_ = pred.shape();
    sums_.assign(pred.t, 0.0);
  } else if (pred.shape() != shape_) {
    throw InvalidArgument("rmse: windows have different shapes");
  }
  const std::size_t row = pred.n * pred.d;
  for (std::size_t s = 0; s < pred.t; ++s) {
    double acc = 0.0;
    for (std::size_t i = s * row; i < (s + 1) * row; ++i) {
      const double e = pred.data[i] - target.data[i];
      acc += e * e;
    }
    sums_[s] += acc;
  }
  ++windows_;
}

double RmseAccumulator::rmse() const {
  const std::size_t count = windows_ * shape_[0] * shape_[1] * shape_[2];
  if (count == 0) throw InvalidArgument("rmse of an empty set");
  double total = 0.0;
  for (double v : sums_) total += v;
  return std::sqrt(total / static_cast<double>(count));
}

std::vector<double> RmseAccumulator::per_horizon() const {
  const std::size_t count = windows_ * shape_[1] * shape_[2];
  if (count == 0) throw InvalidArgument("rmse of an empty set");
  std::vector<double> out(sums_.size());
  for (std::size_t s = 0; s < sums_.size(); ++s) out[s] = std::sqrt(sums_[s] / static_cast<double>(count));
  return out;
}

double rmse(const std::vector<Tensor3>& pred, const std::vector<Tensor3>& target) {
  if (pred.size() != target.size()) throw InvalidArgument("rmse: window counts differ");
  RmseAccumulator acc;
  for (std::size_t w = 0; w < pred.size(); ++w) acc.add(pred[w], target[w]);
  return acc.rmse();
}

std::vector<double> rmse_per_horizon(const std::vector<Tensor3>& pred, const std::vector<Tensor3>& target) {
  if (pred.size() != target.size()) throw InvalidArgument("rmse: window counts differ");
  RmseAccumulator acc;
  for (std::size_t w = 0; w < pred.size(); ++w) acc.add(pred[w], target[w]);
  return acc.per_horizon();
}

Tensor3 repetition_forecast(const Tensor3& context, std::size_t n) {
  if (context.t == 0) throw InvalidArgument("repetition forecast needs a non-empty context");
  Tensor3 out(n, context.n, context.d);
  const std::size_t row = context.n * context.d;
  const auto last = context.data.begin() + static_cast<std::ptrdiff_t>((context.t - 1) * row);
  for (std::size_t s = 0; s < n; ++s) {
    std::copy(last, last + static_cast<std::ptrdiff_t>(row), out.data.begin() + static_cast<std::ptrdiff_t>(s * row));
  }
  return out;
}

}  // namespace stgen
