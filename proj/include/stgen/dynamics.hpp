#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "stgen/geometry.hpp"

namespace stgen {

/// base + amplitude·sin(freq_x·π·x)·sin(freq_y·π·y); frequencies in 1/metres.
struct SinusoidalField {
  double base = 0.0;
  double amplitude = 0.0;
  double freq_x = 0.0;
  double freq_y = 0.0;

  static SinusoidalField constant(double v) { return {v, 0.0, 0.0, 0.0}; }
  friend bool operator==(const SinusoidalField&, const SinusoidalField&) = default;
};

double eval_field(const SinusoidalField& f, Point2 x);

/// One rescaled-time pulse: amplitude · 1_[start, end].
struct Pulse {
  double start = 0.0;
  double end = 0.0;
  double amplitude = 0.0;

  friend bool operator==(const Pulse&, const Pulse&) = default;
};

/// Source supported on [a·10⁶, 1.01a·10⁶] × [b·10⁶, 1.01b·10⁶].
///
/// Inside the rectangle the source is S(t) = ŝ(τ)·10⁻¹⁰ with rescaled time
/// τ = (t − time_origin)·10⁻¹⁰ and ŝ the sum of the pulses.
struct BoxSource {
  double a = 0.0;
  double b = 0.0;
  double time_origin = 0.0;  ///< seconds
  std::vector<Pulse> pulses;

  BoundingBox rectangle() const;
  bool contains(Point2 x) const;
  /// ŝ at rescaled time tau.
  double profile(double tau) const;

  friend bool operator==(const BoxSource&, const BoxSource&) = default;
};

constexpr double kSourceTimeScale = 1e-10;

double eval_source(const BoxSource& s, Point2 x, double t);

/// Wind field. `constant`: (cx, cy). `affine`: (cx, slope·coord·10⁻⁶ + offset)
/// with coord the axis-th coordinate. The result is multiplied by `scale`.
struct VelocityField {
  enum class Kind { constant, affine };
  Kind kind = Kind::constant;
  double cx = 0.0;
  double cy = 0.0;
  double slope = 0.0;
  double offset = 0.0;
  int axis = 1;
  double scale = 1e-4;

  static VelocityField constant(double cx, double cy, double scale = 1e-4) {
    return {Kind::constant, cx, cy, 0.0, 0.0, 1, scale};
  }
  static VelocityField affine(double cx, double slope, double offset, int axis = 1, double scale = 1e-4) {
    return {Kind::affine, cx, 0.0, slope, offset, axis, scale};
  }
  friend bool operator==(const VelocityField&, const VelocityField&) = default;
};

Point2 eval_velocity(const VelocityField& v, Point2 x);

/// Strict axis-aligned inequalities; absent bounds are unconstrained.
struct Region {
  std::optional<double> x_min, x_max, y_min, y_max;

  bool contains(Point2 p) const;
  friend bool operator==(const Region&, const Region&) = default;
};

/// Time-limited Dirichlet patch on the boundary: active for start < t < end
/// on boundary nodes inside `region`.
struct BoundaryWindow {
  double start = 0.0;
  double end = 0.0;
  Region region;
  double value = 0.0;

  friend bool operator==(const BoundaryWindow&, const BoundaryWindow&) = default;
};

bool window_active(const BoundaryWindow& w, Point2 x, double t);

// JSON mapping (nlohmann ADL hooks).
void to_json(nlohmann::json& j, const SinusoidalField& f);
void from_json(const nlohmann::json& j, SinusoidalField& f);
void to_json(nlohmann::json& j, const Pulse& p);
void from_json(const nlohmann::json& j, Pulse& p);
void to_json(nlohmann::json& j, const BoxSource& s);
void from_json(const nlohmann::json& j, BoxSource& s);
void to_json(nlohmann::json& j, const VelocityField& v);
void from_json(const nlohmann::json& j, VelocityField& v);
void to_json(nlohmann::json& j, const Region& r);
void from_json(const nlohmann::json& j, Region& r);
void to_json(nlohmann::json& j, const BoundaryWindow& w);
void from_json(const nlohmann::json& j, BoundaryWindow& w);

}  // namespace stgen
