#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace stgen {

/// Nodal coefficient vectors over time. Each state stores `components`
/// blocks of `node_count` values (component-major).
struct FieldSeries {
  std::string id;
  std::size_t node_count = 0;
  std::size_t components = 1;
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const { return states.size(); }

  std::span<const double> component(std::size_t state, std::size_t c) const {
    return std::span<const double>(states[state]).subspan(c * node_count, node_count);
  }

  void push(double t, std::vector<double> values);
};

/// Writes `<stem>.series.json` (header) and `<stem>.series.f64`
/// (little-endian float64, [state][component][node]).
void write_series(const FieldSeries& series, const std::filesystem::path& stem);
FieldSeries read_series(const std::filesystem::path& header_path);

}  // namespace stgen
