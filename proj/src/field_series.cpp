#include "stgen/field_series.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json_util.hpp"
#include "stgen/error.hpp"
#include "text_util.hpp"

namespace stgen {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void FieldSeries::push(double t, std::vector<double> values) {
  if (values.size() != node_count * components) throw InvalidArgument("series state has wrong size");
  times.push_back(t);
  states.push_back(std::move(values));
}

void write_series(const FieldSeries& series, const std::filesystem::path& stem) {
  const auto header_path = std::filesystem::path(stem.string() + ".series.json");
  const auto payload_path = std::filesystem::path(stem.string() + ".series.f64");
  nlohmann::json h;
  h["format"] = "stgen-series";
  h["version"] = 1;
  h["id"] = series.id;
  h["node_count"] = series.node_count;
  h["components"] = series.components;
  h["states"] = series.size();
  h["dtype"] = "float64";
  h["byte_order"] = "little";
  h["layout"] = "state,component,node";
  h["payload"] = payload_path.filename().string();
  h["times"] = series.times;
  h["meta"] = series.meta;
  detail::write_file(header_path, h.dump(1) + "\n");

  std::ofstream out(payload_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + payload_path.string());
  for (const auto& s : series.states) {
    out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double)));
  }
  if (!out) throw ParseError("short write to " + payload_path.string());
}

FieldSeries read_series(const std::filesystem::path& header_path) {
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(detail::read_file(header_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(header_path.string() + ": " + e.what());
  }
  if (detail::required<std::string>(h, "format") != "stgen-series") {
    throw ParseError(header_path.string() + ": not a series header");
  }
  FieldSeries s;
  s.id = detail::required<std::string>(h, "id");
  s.node_count = detail::required<std::size_t>(h, "node_count");
  s.components = detail::required<std::size_t>(h, "components");
  const auto states = detail::required<std::size_t>(h, "states");
  s.times = detail::required<std::vector<double>>(h, "times");
  s.meta = h.value("meta", nlohmann::json::object());
  if (s.times.size() != states) throw ParseError(header_path.string() + ": times/states mismatch");

  const auto payload = header_path.parent_path() / detail::required<std::string>(h, "payload");
  const std::string bytes = detail::read_file(payload);
  const std::size_t per_state = s.node_count * s.components;
  if (bytes.size() != states * per_state * sizeof(double)) {
    throw ParseError(payload.string() + ": expected " + std::to_string(states * per_state * sizeof(double)) +
                     " bytes, found " + std::to_string(bytes.size()));
  }
  s.states.resize(states, std::vector<double>(per_state));
  for (std::size_t k = 0; k < states; ++k) {
    std::memcpy(s.states[k].data(), bytes.data() + k * per_state * sizeof(double), per_state * sizeof(double));
  }
  return s;
}

}  // namespace stgen
