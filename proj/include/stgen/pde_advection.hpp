#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgen/dynamics.hpp"
#include "stgen/field_series.hpp"
#include "stgen/mesh.hpp"
#include "stgen/sparse.hpp"

namespace stgen {

/// One parameter row: a source and a wind field held for steps_per_block steps.
struct AdvectionBlock {
  std::string id;
  BoxSource source;
  VelocityField beta;

  friend bool operator==(const AdvectionBlock&, const AdvectionBlock&) = default;
};

/// u_t follows the weak forms
///   A(u₊) = ⟨φ,u₊⟩ − ha⟨φ,β·∇u₊⟩ − haα⟨∇φ,∇u₊⟩
///   b     = ⟨φ,u⟩ + hθ⟨φ,β·∇u⟩ + hθα⟨∇φ,∇u⟩ − hθ⟨φ,s⟩ − ha⟨φ,s₊⟩
/// with a = 1 − θ and homogeneous Dirichlet data on the whole boundary.
struct AdvScenario {
  std::string id;
  double alpha = -1.0;
  double theta = 0.5;
  double h = 1e9 / 8.0;  ///< seconds
  std::size_t steps_per_block = 80;
  std::vector<AdvectionBlock> blocks;
  /// Initial condition: indicator of the first block's source rectangle.
  bool indicator_initial = true;
  double solver_tol = 1e-10;

  std::size_t total_steps() const { return steps_per_block * blocks.size(); }
  void validate() const;
};

void to_json(nlohmann::json& j, const AdvectionBlock& b);
void from_json(const nlohmann::json& j, AdvectionBlock& b);
void to_json(nlohmann::json& j, const AdvScenario& s);
void from_json(const nlohmann::json& j, AdvScenario& s);

/// Stepper with the implicit operator cached per block.
class AdvectionSolver {
 public:
  AdvectionSolver(const Mesh& mesh, const AdvScenario& scen);
  ~AdvectionSolver();
  AdvectionSolver(const AdvectionSolver&) = delete;
  AdvectionSolver& operator=(const AdvectionSolver&) = delete;

  /// One step from time t with the parameters of `block`.
  std::vector<double> step(std::span<const double> u, double t, std::size_t block);

  std::vector<double> initial_condition() const;
  const SolveReport& last_report() const { return last_; }

 private:
  struct BlockOperators;
  const BlockOperators& operators(std::size_t block);

  const Mesh& mesh_;
  AdvScenario scen_;
  CsrMatrix mass_;
  CsrMatrix laplace_;
  std::vector<std::size_t> boundary_;
  std::size_t cached_block_ = static_cast<std::size_t>(-1);
  std::unique_ptr<BlockOperators> cache_;
  SolveReport last_;
};

/// Single step without caching; `block` selects the parameter row.
std::vector<double> advection_step(const Mesh& mesh, std::span<const double> u, double t, const AdvScenario& scen,
                                   std::size_t block = 0);

/// total_steps() + 1 states, block k covering steps [k·80, (k+1)·80).
FieldSeries run_advection(const Mesh& mesh, const AdvScenario& scen);

}  // namespace stgen
