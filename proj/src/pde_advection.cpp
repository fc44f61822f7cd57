#include "stgen/pde_advection.hpp"

#include <cmath>
#include <string>

#include "json_util.hpp"
#include "stgen/assembly.hpp"
#include "stgen/error.hpp"

namespace stgen {

using nlohmann::json;
using detail::optional_or;
using detail::required;

void AdvScenario::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("step size must be positive");
  if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
  if (steps_per_block == 0) throw InvalidArgument("steps_per_block must be positive");
  if (blocks.empty()) throw InvalidArgument("advection scenario has no blocks");
}

void to_json(json& j, const AdvectionBlock& b) {
  j = json{{"id", b.id}, {"source", b.source}, {"beta", b.beta}};
}

void from_json(const json& j, AdvectionBlock& b) {
  b.id = optional_or(j, "id", std::string{});
  b.source = required<BoxSource>(j, "source");
  b.beta = required<VelocityField>(j, "beta");
}

void to_json(json& j, const AdvScenario& s) {
  j = json{{"kind", "advection"},
           {"id", s.id},
           {"alpha", s.alpha},
           {"theta", s.theta},
           {"h", s.h},
           {"steps_per_block", s.steps_per_block},
           {"indicator_initial", s.indicator_initial},
           {"solver_tol", s.solver_tol},
           {"blocks", s.blocks}};
}

void from_json(const json& j, AdvScenario& s) {
  const AdvScenario d;
  if (j.contains("kind") && j.at("kind") != "advection") throw ParseError("scenario kind is not 'advection'");
  s.id = required<std::string>(j, "id");
  s.alpha = optional_or(j, "alpha", d.alpha);
  s.theta = optional_or(j, "theta", d.theta);
  s.h = optional_or(j, "h", d.h);
  s.steps_per_block = optional_or(j, "steps_per_block", d.steps_per_block);
  s.indicator_initial = optional_or(j, "indicator_initial", d.indicator_initial);
  s.solver_tol = optional_or(j, "solver_tol", d.solver_tol);
  s.blocks = required<std::vector<AdvectionBlock>>(j, "blocks");
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("scenario '") + s.id + "': " + e.what());
  }
}

struct AdvectionSolver::BlockOperators {
  CsrMatrix implicit;  // Dirichlet rows eliminated
  CsrMatrix explicit_;
  std::vector<double> source_load;  // M·χ of the source rectangle
};

AdvectionSolver::AdvectionSolver(const Mesh& mesh, const AdvScenario& scen) : mesh_(mesh), scen_(scen) {
  scen_.validate();
  mass_ = assemble_operator(mesh, OperatorKind::mass, CoefficientField::constant(1.0));
  laplace_ = assemble_operator(mesh, OperatorKind::stiffness, CoefficientField::constant(1.0));
  boundary_ = mesh.boundary_nodes();
}

AdvectionSolver::~AdvectionSolver() = default;

const AdvectionSolver::BlockOperators& AdvectionSolver::operators(std::size_t block) {
  if (block >= scen_.blocks.size()) throw InvalidArgument("block index out of range");
  if (cache_ && cached_block_ == block) return *cache_;
  const auto& row = scen_.blocks[block];
  const auto beta = row.beta;
  const auto conv = assemble_operator(
      mesh_, OperatorKind::advection, CoefficientField::vector([beta](Point2 x, double) { return eval_velocity(beta, x); }));
  const double h = scen_.h;
  const double a = 1.0 - scen_.theta;
  const double th = scen_.theta;
  auto ops = std::make_unique<BlockOperators>();
  // A = M − ha·C − haα·K,  E = M + hθ·C + hθα·K
  ops->implicit = add(add(mass_, conv, 1.0, -h * a), laplace_, 1.0, -h * a * scen_.alpha);
  ops->explicit_ = add(add(mass_, conv, 1.0, h * th), laplace_, 1.0, h * th * scen_.alpha);
  eliminate_dirichlet_matrix(ops->implicit, boundary_);

  std::vector<double> chi(mesh_.node_count(), 0.0);
  for (std::size_t i = 0; i < chi.size(); ++i) chi[i] = row.source.contains(mesh_.nodes()[i]) ? 1.0 : 0.0;
  ops->source_load = spmv(mass_, chi);
  cache_ = std::move(ops);
  cached_block_ = block;
  return *cache_;
}

std::vector<double> AdvectionSolver::step(std::span<const double> u, double t, std::size_t block) {
  const std::size_t n = mesh_.node_count();
  if (u.size() != n) throw InvalidArgument("advection state size mismatch");
  const auto& ops = operators(block);
  const auto& src = scen_.blocks[block].source;
  const double h = scen_.h;
  const double s0 = src.profile((t - src.time_origin) * kSourceTimeScale) * kSourceTimeScale;
  const double s1 = src.profile((t + h - src.time_origin) * kSourceTimeScale) * kSourceTimeScale;
  const double w = h * scen_.theta * s0 + h * (1.0 - scen_.theta) * s1;

  auto rhs = spmv(ops.explicit_, u);
  if (w != 0.0) {
    for (std::size_t i = 0; i < n; ++i) rhs[i] -= w * ops.source_load[i];
  }
  for (auto node : boundary_) rhs[node] = 0.0;

  auto sol = solve_bicgstab(ops.implicit, rhs, {scen_.solver_tol, 0}, u);
  last_ = sol.report;
  if (!sol.report.converged) {
    throw NumericalError("advection solve did not converge (relative residual " + std::to_string(sol.report.residual) +
                         ")");
  }
  for (auto node : boundary_) sol.x[node] = 0.0;
  return std::move(sol.x);
}

std::vector<double> AdvectionSolver::initial_condition() const {
  std::vector<double> u(mesh_.node_count(), 0.0);
  if (!scen_.indicator_initial) return u;
  const auto& src = scen_.blocks.front().source;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = src.contains(mesh_.nodes()[i]) ? 1.0 : 0.0;
  for (auto node : boundary_) u[node] = 0.0;
  return u;
}

std::vector<double> advection_step(const Mesh& mesh, std::span<const double> u, double t, const AdvScenario& scen,
                                   std::size_t block) {
  AdvectionSolver solver(mesh, scen);
  return solver.step(u, t, block);
}

FieldSeries run_advection(const Mesh& mesh, const AdvScenario& scen) {
  AdvectionSolver solver(mesh, scen);
  FieldSeries series;
  series.id = scen.id;
  series.node_count = mesh.node_count();
  series.components = 1;
  series.meta = {{"kind", "advection"}, {"components", {"u"}}, {"h", scen.h}, {"steps_per_block", scen.steps_per_block}};
  auto u = solver.initial_condition();
  series.push(0.0, u);
  std::size_t k = 0;
  for (std::size_t b = 0; b < scen.blocks.size(); ++b) {
    for (std::size_t j = 0; j < scen.steps_per_block; ++j, ++k) {
      const double t = static_cast<double>(k) * scen.h;
      try {
        u = solver.step(u, t, b);
      } catch (const NumericalError& e) {
        throw NumericalError("scenario '" + scen.id + "', block " + std::to_string(b + 1) + ", step " +
                             std::to_string(j + 1) + ": " + e.what());
      }
      series.push(static_cast<double>(k + 1) * scen.h, u);
    }
  }
  return series;
}

}  // namespace stgen
