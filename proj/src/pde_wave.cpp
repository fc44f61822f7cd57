#include "stgen/pde_wave.hpp"

#include <cmath>
#include <string>

#include "json_util.hpp"
#include "stgen/assembly.hpp"
#include "stgen/error.hpp"

namespace stgen {

using nlohmann::json;
using detail::optional_or;
using detail::required;

void WaveScenario::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("step size must be positive");
  if (!(damping >= 0.0)) throw InvalidArgument("damping must be nonnegative");
  if (!(robin_ratio >= 0.0)) throw InvalidArgument("robin_ratio must be nonnegative");
  if (!(solver_tol > 0.0)) throw InvalidArgument("solver_tol must be positive");
}

void to_json(json& j, const WaveScenario& s) {
  j = json{{"kind", "wave"},         {"id", s.id},       {"damping", s.damping},
           {"robin_ratio", s.robin_ratio}, {"theta", s.theta}, {"h", s.h},
           {"steps", s.steps},       {"windows", s.windows}, {"solver_tol", s.solver_tol}};
}

void from_json(const json& j, WaveScenario& s) {
  const WaveScenario d;
  if (j.contains("kind") && j.at("kind") != "wave") throw ParseError("scenario kind is not 'wave'");
  s.id = required<std::string>(j, "id");
  s.damping = optional_or(j, "damping", d.damping);
  s.robin_ratio = optional_or(j, "robin_ratio", d.robin_ratio);
  s.theta = optional_or(j, "theta", d.theta);
  s.h = optional_or(j, "h", d.h);
  s.steps = optional_or(j, "steps", d.steps);
  s.windows = optional_or(j, "windows", std::vector<BoundaryWindow>{});
  s.solver_tol = optional_or(j, "solver_tol", d.solver_tol);
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("scenario '") + s.id + "': " + e.what());
  }
}

WaveOperators build_wave_operators(const Mesh& mesh, const WaveScenario& scen) {
  WaveOperators ops;
  ops.mass = assemble_operator(mesh, OperatorKind::mass, CoefficientField::constant(1.0));
  const auto k = assemble_operator(mesh, OperatorKind::stiffness, CoefficientField::constant(1.0));
  if (scen.robin_ratio == 0.0) {
    ops.k_eff = k;
  } else {
    const auto b = assemble_boundary_mass(mesh, [](int, Point2) { return true; });
    ops.k_eff = add(k, b, 1.0, scen.robin_ratio);
  }
  return ops;
}

double wave_energy(const WaveOperators& ops, const WaveState& s) {
  return 0.5 * (dot(s.v, spmv(ops.mass, s.v)) + dot(s.u, spmv(ops.k_eff, s.u)));
}

WaveSolver::WaveSolver(const Mesh& mesh, const WaveScenario& scen)
    : WaveSolver(mesh, scen, build_wave_operators(mesh, scen)) {}

WaveSolver::WaveSolver(const Mesh& mesh, const WaveScenario& scen, WaveOperators ops)
    : mesh_(mesh), scen_(scen), ops_(std::move(ops)), boundary_(mesh.boundary_nodes()) {
  scen_.validate();
  if (ops_.mass.rows() != mesh.node_count() || ops_.k_eff.rows() != mesh.node_count()) {
    throw InvalidArgument("wave operators do not match the mesh");
  }
}

WaveState WaveSolver::zero_state() const {
  return {std::vector<double>(mesh_.node_count(), 0.0), std::vector<double>(mesh_.node_count(), 0.0), 0.0};
}

const WaveSolver::Factor& WaveSolver::system_for(double h, const std::vector<std::size_t>& pinned) {
  for (const auto& f : cache_) {
    if (f.h == h && f.pinned == pinned) return f;
  }
  if (cache_.size() >= 8) cache_.erase(cache_.begin());
  const double a = 1.0 - scen_.theta;
  const double damp = 1.0 + h * a * scen_.damping;
  if (!(damp > 0.0)) throw NumericalError("wave step size makes the damping factor nonpositive");
  Factor f{h, pinned, add(ops_.mass, ops_.k_eff, damp, h * h * a * a), {}};
  f.elim = eliminate_dirichlet_matrix(f.system, pinned);
  cache_.push_back(std::move(f));
  return cache_.back();
}

WaveState WaveSolver::step(const WaveState& s) { return step(s, scen_.h); }

WaveState WaveSolver::step(const WaveState& s, double h) {
  const std::size_t n = mesh_.node_count();
  if (s.u.size() != n || s.v.size() != n) throw InvalidArgument("wave state size mismatch");
  if (h == 0.0 || !std::isfinite(h)) throw InvalidArgument("wave step size must be nonzero");
  const double t_next = s.t + h;

  std::vector<std::size_t> pinned;
  std::vector<DirichletConstraint> values;
  for (auto node : boundary_) {
    for (const auto& w : scen_.windows) {
      if (window_active(w, mesh_.nodes()[node], t_next)) {
        pinned.push_back(node);
        values.push_back({node, w.value});
        break;
      }
    }
  }

  const double a = 1.0 - scen_.theta;
  const double th = scen_.theta;
  const double b = scen_.damping;
  const double damp = 1.0 + h * a * b;
  const auto& sys = system_for(h, pinned);

  const auto mu = spmv(ops_.mass, s.u);
  const auto mv = spmv(ops_.mass, s.v);
  const auto ku = spmv(ops_.k_eff, s.u);
  const double cv = h * th * damp + h * a * (1.0 - h * th * b);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = damp * mu[i] + cv * mv[i] - h * h * a * th * ku[i];
  if (!pinned.empty()) apply_dirichlet_rhs(sys.elim, values, rhs);

  const SolverOptions opts{scen_.solver_tol, 0};
  auto u_sol = solve_cg(sys.system, rhs, opts, s.u);
  if (!u_sol.report.converged) {
    throw NumericalError("wave displacement solve did not converge (relative residual " +
                         std::to_string(u_sol.report.residual) + ")");
  }
  WaveState next;
  next.t = t_next;
  next.u = std::move(u_sol.x);
  for (const auto& c : values) next.u[c.node] = c.value;

  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = a * next.u[i] + th * s.u[i];
  const auto kmix = spmv(ops_.k_eff, mix);
  auto w_sol = solve_cg(ops_.mass, kmix, opts);
  if (!w_sol.report.converged) {
    throw NumericalError("wave velocity solve did not converge (relative residual " +
                         std::to_string(w_sol.report.residual) + ")");
  }
  next.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) next.v[i] = ((1.0 - h * th * b) * s.v[i] - h * w_sol.x[i]) / damp;
  for (auto node : pinned) next.v[node] = 0.0;
  return next;
}

WaveState wave_step(const Mesh& mesh, const WaveState& s, const WaveScenario& scen, const WaveOperators& ops) {
  WaveSolver solver(mesh, scen, ops);
  return solver.step(s);
}

FieldSeries run_wave(const Mesh& mesh, const WaveScenario& scen) {
  WaveSolver solver(mesh, scen);
  FieldSeries series;
  series.id = scen.id;
  series.node_count = mesh.node_count();
  series.components = 1;
  series.meta = {{"kind", "wave"}, {"components", {"u"}}, {"h", scen.h}};
  auto state = solver.zero_state();
  series.push(state.t, state.u);
  for (std::size_t k = 0; k < scen.steps; ++k) {
    try {
      state = solver.step(state);
    } catch (const NumericalError& e) {
      throw NumericalError("scenario '" + scen.id + "', step " + std::to_string(k + 1) + ": " + e.what());
    }
    series.push(state.t, state.u);
  }
  return series;
}

}  // namespace stgen
