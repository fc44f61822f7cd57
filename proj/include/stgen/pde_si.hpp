#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgen/dynamics.hpp"
#include "stgen/field_series.hpp"
#include "stgen/mesh.hpp"
#include "stgen/sparse.hpp"

namespace stgen {

struct NewtonOptions {
  double eta = 0.3;           ///< damping: x += eta·δ
  double tol = 1e-8;          ///< ||R|| <= tol·||rhs||
  std::size_t max_iter = 50;
  double linear_tol = 1e-6;   ///< BiCGSTAB relative tolerance for J δ = -R

  friend bool operator==(const NewtonOptions&, const NewtonOptions&) = default;
};

/// Susceptible/infected reaction-diffusion scenario:
///   S_t = -r S I + ∇·(D∇S),  I_t = r S I - α I + ∇·(D∇I).
struct SiScenario {
  std::string id;
  SinusoidalField r = SinusoidalField::constant(0.6);
  SinusoidalField diffusion = SinusoidalField::constant(2e8);
  double alpha = 0.22;
  double theta = 0.5;      ///< weight of the known state
  double h = 1.0;          ///< days
  std::size_t steps = 364;
  double initial_s = 1.0;
  double initial_i = 0.0;
  std::vector<BoundaryWindow> seeds;  ///< Dirichlet patches on I
  NewtonOptions newton;

  void validate() const;
};

void to_json(nlohmann::json& j, const NewtonOptions& o);
void from_json(const nlohmann::json& j, NewtonOptions& o);
void to_json(nlohmann::json& j, const SiScenario& s);
void from_json(const nlohmann::json& j, SiScenario& s);

struct SiState {
  std::vector<double> s;
  std::vector<double> i;
  double t = 0.0;
};

/// Mass M, r-weighted mass Mr and D-weighted stiffness K on a shared pattern.
struct SiOperators {
  CsrMatrix mass;
  CsrMatrix reaction;
  CsrMatrix stiffness;
};

SiOperators build_si_operators(const Mesh& mesh, const SiScenario& scen);

/// Residual of the group-FEM θ-step, stacked as [R_S; R_I].
std::vector<double> si_residual(const SiOperators& ops, const SiState& next, const SiState& current,
                                const SiScenario& scen);

/// Exact Jacobian of si_residual with respect to [S₊; I₊].
CsrMatrix si_jacobian(const SiOperators& ops, const SiState& next, const SiScenario& scen);

struct NewtonReport {
  std::size_t iterations = 0;
  double residual = 0.0;  ///< final relative residual
  bool converged = false;
  std::vector<double> history;  ///< relative residual before each iteration and after the last
};

/// Damped Newton for one step from `current` to t + h, starting from
/// `guess` (default: `current`). Pinned I values are imposed exactly and
/// their rows are excluded from the residual norm.
SiState newton_solve(const SiOperators& ops, const SiState& current, const SiScenario& scen,
                     std::span<const std::size_t> pinned_nodes, std::span<const double> pinned_values,
                     NewtonReport* report = nullptr, const SiState* guess = nullptr);

/// Boundary nodes seeded at time t (first matching window wins).
void si_seed_nodes(const Mesh& mesh, const SiScenario& scen, double t, std::vector<std::size_t>& nodes,
                   std::vector<double>& values);

SiState si_initial_state(const Mesh& mesh, const SiScenario& scen);

/// Full trajectory, steps + 1 states of [S; I].
FieldSeries run_si_scenario(const Mesh& mesh, const SiScenario& scen);

}  // namespace stgen
