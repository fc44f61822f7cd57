#include "stgen/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json_util.hpp"
#include "stgen/error.hpp"

namespace stgen {

using nlohmann::json;

double eval_field(const SinusoidalField& f, Point2 x) {
  if (f.amplitude == 0.0) return f.base;
  return f.base + f.amplitude * std::sin(f.freq_x * std::numbers::pi * x.x) *
                      std::sin(f.freq_y * std::numbers::pi * x.y);
}

BoundingBox BoxSource::rectangle() const {
  const double x0 = a * 1e6;
  const double y0 = b * 1e6;
  const double x1 = 1.01 * a * 1e6;
  const double y1 = 1.01 * b * 1e6;
  return {{std::min(x0, x1), std::min(y0, y1)}, {std::max(x0, x1), std::max(y0, y1)}};
}

bool BoxSource::contains(Point2 x) const { return rectangle().contains(x); }

double BoxSource::profile(double tau) const {
  double s = 0.0;
  for (const auto& p : pulses) {
    if (tau >= p.start && tau <= p.end) s += p.amplitude;
  }
  return s;
}

double eval_source(const BoxSource& s, Point2 x, double t) {
  if (!s.contains(x)) return 0.0;
  return s.profile((t - s.time_origin) * kSourceTimeScale) * kSourceTimeScale;
}

Point2 eval_velocity(const VelocityField& v, Point2 x) {
  switch (v.kind) {
    case VelocityField::Kind::constant:
      return {v.scale * v.cx, v.scale * v.cy};
    case VelocityField::Kind::affine: {
      const double coord = v.axis == 0 ? x.x : x.y;
      return {v.scale * v.cx, v.scale * (v.slope * coord * 1e-6 + v.offset)};
    }
  }
  return {};
}

bool Region::contains(Point2 p) const {
  if (x_min && !(p.x > *x_min)) return false;
  if (x_max && !(p.x < *x_max)) return false;
  if (y_min && !(p.y > *y_min)) return false;
  if (y_max && !(p.y < *y_max)) return false;
  return true;
}

bool window_active(const BoundaryWindow& w, Point2 x, double t) {
  return t > w.start && t < w.end && w.region.contains(x);
}

// ---------------------------------------------------------------------------
// JSON

using detail::optional_or;
using detail::required;

void to_json(json& j, const SinusoidalField& f) {
  j = json{{"base", f.base}, {"amplitude", f.amplitude}, {"freq_x", f.freq_x}, {"freq_y", f.freq_y}};
}

void from_json(const json& j, SinusoidalField& f) {
  if (j.is_number()) {
    f = SinusoidalField::constant(j.get<double>());
    return;
  }
  f.base = required<double>(j, "base");
  f.amplitude = optional_or(j, "amplitude", 0.0);
  f.freq_x = optional_or(j, "freq_x", 0.0);
  f.freq_y = optional_or(j, "freq_y", 0.0);
}

void to_json(json& j, const Pulse& p) {
  j = json{{"start", p.start}, {"end", p.end}, {"amplitude", p.amplitude}};
}

void from_json(const json& j, Pulse& p) {
  p.start = required<double>(j, "start");
  p.end = required<double>(j, "end");
  p.amplitude = required<double>(j, "amplitude");
  if (!(p.end >= p.start)) throw ParseError("pulse interval end precedes start");
}

void to_json(json& j, const BoxSource& s) {
  j = json{{"a", s.a}, {"b", s.b}, {"time_origin", s.time_origin}, {"pulses", s.pulses}};
}

void from_json(const json& j, BoxSource& s) {
  s.a = required<double>(j, "a");
  s.b = required<double>(j, "b");
  s.time_origin = optional_or(j, "time_origin", 0.0);
  s.pulses = optional_or(j, "pulses", std::vector<Pulse>{});
  auto sorted = s.pulses;
  std::sort(sorted.begin(), sorted.end(), [](const Pulse& l, const Pulse& r) { return l.start < r.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start <= sorted[i - 1].end) throw ParseError("source pulses overlap");
  }
}

void to_json(json& j, const VelocityField& v) {
  if (v.kind == VelocityField::Kind::constant) {
    j = json{{"kind", "constant"}, {"c", {v.cx, v.cy}}, {"scale", v.scale}};
  } else {
    j = json{{"kind", "affine"}, {"c", v.cx}, {"slope", v.slope}, {"offset", v.offset},
             {"axis", v.axis}, {"scale", v.scale}};
  }
}

void from_json(const json& j, VelocityField& v) {
  const auto kind = required<std::string>(j, "kind");
  v.scale = optional_or(j, "scale", 1e-4);
  if (kind == "constant") {
    const auto c = required<std::vector<double>>(j, "c");
    if (c.size() != 2) throw ParseError("constant velocity needs two components");
    v = VelocityField::constant(c[0], c[1], v.scale);
  } else if (kind == "affine") {
    const int axis = optional_or(j, "axis", 1);
    if (axis != 0 && axis != 1) throw ParseError("velocity axis must be 0 or 1");
    v = VelocityField::affine(required<double>(j, "c"), required<double>(j, "slope"),
                              required<double>(j, "offset"), axis, v.scale);
  } else {
    throw ParseError("unknown velocity kind '" + kind + "'");
  }
}

void to_json(json& j, const Region& r) {
  j = json::object();
  if (r.x_min) j["x_min"] = *r.x_min;
  if (r.x_max) j["x_max"] = *r.x_max;
  if (r.y_min) j["y_min"] = *r.y_min;
  if (r.y_max) j["y_max"] = *r.y_max;
}

void from_json(const json& j, Region& r) {
  r = {};
  for (const auto& [key, value] : j.items()) {
    if (key != "x_min" && key != "x_max" && key != "y_min" && key != "y_max") {
      throw ParseError("unknown region key '" + key + "'");
    }
  }
  if (j.contains("x_min")) r.x_min = required<double>(j, "x_min");
  if (j.contains("x_max")) r.x_max = required<double>(j, "x_max");
  if (j.contains("y_min")) r.y_min = required<double>(j, "y_min");
  if (j.contains("y_max")) r.y_max = required<double>(j, "y_max");
}

void to_json(json& j, const BoundaryWindow& w) {
  j = json{{"start", w.start}, {"end", w.end}, {"region", w.region}, {"value", w.value}};
}

void from_json(const json& j, BoundaryWindow& w) {
  w.start = required<double>(j, "start");
  w.end = required<double>(j, "end");
  w.region = optional_or(j, "region", Region{});
  w.value = required<double>(j, "value");
  if (!(w.start < w.end)) throw ParseError("boundary window needs start < end");
}

}  // namespace stgen
