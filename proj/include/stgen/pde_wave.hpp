#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgen/dynamics.hpp"
#include "stgen/field_series.hpp"
#include "stgen/mesh.hpp"
#include "stgen/assembly.hpp"
#include "stgen/sparse.hpp"

namespace stgen {

/// u_t = v, v_t + b·u_t = Δu with Robin data u + (1/ratio)·∂u/∂n = 0 and
/// windowed Dirichlet forcing on the boundary.
struct WaveScenario {
  std::string id;
  double damping = 5e-6;      ///< b, 1/s
  double robin_ratio = 1.0;   ///< α/β, 1/m
  double theta = 0.5;
  double h = 100000.0 / 64.0; ///< seconds
  std::size_t steps = 1728;
  std::vector<BoundaryWindow> windows;
  double solver_tol = 1e-12;

  void validate() const;
};

void to_json(nlohmann::json& j, const WaveScenario& s);
void from_json(const nlohmann::json& j, WaveScenario& s);

struct WaveState {
  std::vector<double> u;
  std::vector<double> v;
  double t = 0.0;
};

struct WaveOperators {
  CsrMatrix mass;
  CsrMatrix k_eff;  ///< stiffness + robin_ratio·boundary mass
};

WaveOperators build_wave_operators(const Mesh& mesh, const WaveScenario& scen);

/// ½(vᵀMv + uᵀK_eff u).
double wave_energy(const WaveOperators& ops, const WaveState& s);

/// Stepper caching the displacement matrix per set of pinned nodes.
/// A negative step size runs the scheme backwards in time.
class WaveSolver {
 public:
  WaveSolver(const Mesh& mesh, const WaveScenario& scen);
  WaveSolver(const Mesh& mesh, const WaveScenario& scen, WaveOperators ops);

  WaveState step(const WaveState& s);
  WaveState step(const WaveState& s, double h);

  const WaveOperators& operators() const { return ops_; }
  double energy(const WaveState& s) const { return wave_energy(ops_, s); }
  WaveState zero_state() const;

 private:
  struct Factor {
    double h;
    std::vector<std::size_t> pinned;
    CsrMatrix system;
    DirichletElimination elim;
  };
  const Factor& system_for(double h, const std::vector<std::size_t>& pinned);

  const Mesh& mesh_;
  WaveScenario scen_;
  WaveOperators ops_;
  std::vector<std::size_t> boundary_;
  std::vector<Factor> cache_;
};

WaveState wave_step(const Mesh& mesh, const WaveState& s, const WaveScenario& scen, const WaveOperators& ops);

/// steps + 1 states of u.
FieldSeries run_wave(const Mesh& mesh, const WaveScenario& scen);

}  // namespace stgen
