#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgen/probe_graph.hpp"

namespace stgen {

/// Probe graph plus a [T, N, d] value tensor. `segments` holds the segment
/// boundaries 0 = s₀ < s₁ < … < s_k = T (one segment per simulated scenario or block).
struct TemporalGraphDataset {
  Graph graph;
  Tensor3 values;
  std::vector<std::size_t> segments;
  std::vector<std::string> components;
  double scale = 1.0;       ///< raw value = stored value · scale
  bool normalized = false;
  nlohmann::json meta = nlohmann::json::object();

  void validate() const;
};

/// Writes dataset.stg.json, dataset.stg.f32, nodes.csv, edges.csv and,
/// when requested, values.csv into `dir`.
void write_dataset(const TemporalGraphDataset& ds, const std::filesystem::path& dir, bool values_csv = false);
TemporalGraphDataset read_dataset(const std::filesystem::path& dir);

/// Divides by the global max |value|.
TemporalGraphDataset normalize(TemporalGraphDataset ds);
TemporalGraphDataset denormalize(TemporalGraphDataset ds);

/// Contiguous time range [begin, end) with the segment boundaries it contains.
struct SplitPart {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<std::size_t> segments;  ///< absolute boundaries, front() = begin, back() = end

  std::size_t length() const { return end - begin; }
};

struct DatasetSplit {
  SplitPart train, val, test;
};

/// Whole segments per part: round(fraction·k) for train and val, the rest for test.
DatasetSplit split(const std::vector<std::size_t>& segments, std::array<double, 3> fractions = {0.76, 0.12, 0.12});

/// Window origins such that [origin, origin + m + n) lies inside one segment.
std::vector<std::size_t> window_origins(const SplitPart& part, std::size_t m = 14, std::size_t n = 14,
                                        std::size_t stride = 1);

struct WindowSample {
  std::size_t origin = 0;
  Tensor3 context;  ///< [m, N, d]
  Tensor3 target;   ///< [n, N, d]
};

/// Rows [first, first + count) of a tensor.
Tensor3 slice_rows(const Tensor3& x, std::size_t first, std::size_t count);

std::vector<WindowSample> windows(const Tensor3& values, const SplitPart& part, std::size_t m = 14,
                                  std::size_t n = 14, std::size_t stride = 1);

struct NoiseSpec {
  enum class Kind { gaussian, dropout };
  Kind kind = Kind::gaussian;
  double sigma = 0.1;   ///< standard deviation
  double rate = 0.1;    ///< dropout fraction
  std::uint64_t seed = 0;
  bool bernoulli = false;  ///< dropout: independent per-entry draws instead of an exact count

  void validate() const;
};

void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);

Tensor3 add_noise(const Tensor3& x, const NoiseSpec& spec);

/// Streaming squared-error sums per horizon step.
class RmseAccumulator {
 public:
  void add(const Tensor3& pred, const Tensor3& target);
  double rmse() const;
  std::vector<double> per_horizon() const;
  std::size_t windows() const { return windows_; }

 private:
  std::array<std::size_t, 3> shape_{};
  std::vector<double> sums_;
  std::size_t windows_ = 0;
};

/// Root mean squared error over every window, horizon step, node and component.
double rmse(const std::vector<Tensor3>& pred, const std::vector<Tensor3>& target);
/// RMSE per horizon step (row of each window).
std::vector<double> rmse_per_horizon(const std::vector<Tensor3>& pred, const std::vector<Tensor3>& target);

/// n copies of the last context row.
Tensor3 repetition_forecast(const Tensor3& context, std::size_t n = 14);

}  // namespace stgen
