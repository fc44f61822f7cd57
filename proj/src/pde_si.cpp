#include "stgen/pde_si.hpp"

#include <cmath>
#include <string>

#include "json_util.hpp"
#include "stgen/assembly.hpp"
#include "stgen/error.hpp"

namespace stgen {

using nlohmann::json;
using detail::optional_or;
using detail::required;

void SiScenario::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("step size must be positive");
  if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
  if (!(newton.eta > 0.0 && newton.eta <= 1.0)) throw InvalidArgument("Newton damping must lie in (0, 1]");
  if (!(newton.tol > 0.0)) throw InvalidArgument("Newton tolerance must be positive");
  if (newton.max_iter == 0) throw InvalidArgument("Newton needs at least one iteration");
}

void to_json(json& j, const NewtonOptions& o) {
  j = json{{"eta", o.eta}, {"tol", o.tol}, {"max_iter", o.max_iter}, {"linear_tol", o.linear_tol}};
}

void from_json(const json& j, NewtonOptions& o) {
  const NewtonOptions d;
  o.eta = optional_or(j, "eta", d.eta);
  o.tol = optional_or(j, "tol", d.tol);
  o.max_iter = optional_or(j, "max_iter", d.max_iter);
  o.linear_tol = optional_or(j, "linear_tol", d.linear_tol);
}

void to_json(json& j, const SiScenario& s) {
  j = json{{"kind", "si"},
           {"id", s.id},
           {"r", s.r},
           {"D", s.diffusion},
           {"alpha", s.alpha},
           {"theta", s.theta},
           {"h", s.h},
           {"steps", s.steps},
           {"initial_S", s.initial_s},
           {"initial_I", s.initial_i},
           {"seeds", s.seeds},
           {"newton", s.newton}};
}

void from_json(const json& j, SiScenario& s) {
  const SiScenario d;
  if (j.contains("kind") && j.at("kind") != "si") throw ParseError("scenario kind is not 'si'");
  s.id = required<std::string>(j, "id");
  s.r = required<SinusoidalField>(j, "r");
  s.diffusion = required<SinusoidalField>(j, "D");
  s.alpha = optional_or(j, "alpha", d.alpha);
  s.theta = optional_or(j, "theta", d.theta);
  s.h = optional_or(j, "h", d.h);
  s.steps = optional_or(j, "steps", d.steps);
  s.initial_s = optional_or(j, "initial_S", d.initial_s);
  s.initial_i = optional_or(j, "initial_I", d.initial_i);
  s.seeds = optional_or(j, "seeds", std::vector<BoundaryWindow>{});
  s.newton = optional_or(j, "newton", d.newton);
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("scenario '") + s.id + "': " + e.what());
  }
}

SiOperators build_si_operators(const Mesh& mesh, const SiScenario& scen) {
  const auto r = scen.r;
  const auto dcoef = scen.diffusion;
  SiOperators ops;
  ops.mass = assemble_operator(mesh, OperatorKind::mass, CoefficientField::constant(1.0));
  ops.reaction = assemble_operator(mesh, OperatorKind::mass,
                                   CoefficientField::function([r](Point2 x, double) { return eval_field(r, x); }));
  ops.stiffness = assemble_operator(
      mesh, OperatorKind::stiffness, CoefficientField::function([dcoef](Point2 x, double) { return eval_field(dcoef, x); }));
  if (ops.reaction.offsets() != ops.mass.offsets() || ops.stiffness.columns() != ops.mass.columns()) {
    throw NumericalError("SI operators do not share a sparsity pattern");
  }
  return ops;
}

namespace {

std::size_t size_of(const SiOperators& ops) { return ops.mass.rows(); }

void check_state(const SiOperators& ops, const SiState& s) {
  if (s.s.size() != size_of(ops) || s.i.size() != size_of(ops)) throw InvalidArgument("SI state size mismatch");
}

// Implicit part A(x) and explicit part b(x) share the form
//   M S + c·Mr(S∘I) + c·K S  and  M I − c·Mr(S∘I) + cα·M I + c·K I
// with c = a·h for A and c = −θ·h for b.
void apply_operator(const SiOperators& ops, const SiState& x, double c, double alpha, std::span<double> out_s,
                    std::span<double> out_i) {
  const std::size_t n = size_of(ops);
  std::vector<double> si(n);
  for (std::size_t k = 0; k < n; ++k) si[k] = x.s[k] * x.i[k];
  std::vector<double> ms(n), mi(n), rsi(n), ks(n), ki(n);
  spmv(ops.mass, x.s, ms);
  spmv(ops.mass, x.i, mi);
  spmv(ops.reaction, si, rsi);
  spmv(ops.stiffness, x.s, ks);
  spmv(ops.stiffness, x.i, ki);
  for (std::size_t k = 0; k < n; ++k) {
    out_s[k] = ms[k] + c * rsi[k] + c * ks[k];
    out_i[k] = mi[k] - c * rsi[k] + c * alpha * mi[k] + c * ki[k];
  }
}

std::vector<double> explicit_part(const SiOperators& ops, const SiState& current, const SiScenario& scen) {
  const std::size_t n = size_of(ops);
  std::vector<double> b(2 * n);
  apply_operator(ops, current, -scen.theta * scen.h, scen.alpha, std::span(b).first(n), std::span(b).subspan(n));
  return b;
}

std::vector<double> implicit_part(const SiOperators& ops, const SiState& next, const SiScenario& scen) {
  const std::size_t n = size_of(ops);
  std::vector<double> a(2 * n);
  apply_operator(ops, next, (1.0 - scen.theta) * scen.h, scen.alpha, std::span(a).first(n), std::span(a).subspan(n));
  return a;
}

// Jacobian pattern: block2x2 of the shared operator pattern.
CsrMatrix jacobian_pattern(const SiOperators& ops) {
  return block2x2(ops.mass, ops.mass, ops.mass, ops.mass);
}

void fill_jacobian(const SiOperators& ops, const SiState& next, const SiScenario& scen, CsrMatrix& jac) {
  const std::size_t n = size_of(ops);
  const double ah = (1.0 - scen.theta) * scen.h;
  const auto& off = ops.mass.offsets();
  const auto& col = ops.mass.columns();
  const auto& m = ops.mass.values();
  const auto& mr = ops.reaction.values();
  const auto& kk = ops.stiffness.values();
  const auto& joff = jac.offsets();
  auto& jv = jac.values();
  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t len = off[row + 1] - off[row];
    const std::size_t top = joff[row];
    const std::size_t bottom = joff[n + row];
    for (std::size_t k = off[row]; k < off[row + 1]; ++k) {
      const std::size_t c = col[k];
      const std::size_t p = k - off[row];
      const double mr_i = mr[k] * next.i[c];
      const double mr_s = mr[k] * next.s[c];
      jv[top + p] = m[k] + ah * (mr_i + kk[k]);
      jv[top + len + p] = ah * mr_s;
      jv[bottom + p] = -ah * mr_i;
      jv[bottom + len + p] = m[k] + ah * (-mr_s + scen.alpha * m[k] + kk[k]);
    }
  }
}

}  // namespace

std::vector<double> si_residual(const SiOperators& ops, const SiState& next, const SiState& current,
                                const SiScenario& scen) {
  check_state(ops, next);
  check_state(ops, current);
  auto a = implicit_part(ops, next, scen);
  const auto b = explicit_part(ops, current, scen);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] -= b[k];
  return a;
}

CsrMatrix si_jacobian(const SiOperators& ops, const SiState& next, const SiScenario& scen) {
  check_state(ops, next);
  auto jac = jacobian_pattern(ops);
  fill_jacobian(ops, next, scen, jac);
  return jac;
}

SiState newton_solve(const SiOperators& ops, const SiState& current, const SiScenario& scen,
                     std::span<const std::size_t> pinned_nodes, std::span<const double> pinned_values,
                     NewtonReport* report, const SiState* guess) {
  check_state(ops, current);
  if (guess) check_state(ops, *guess);
  if (pinned_nodes.size() != pinned_values.size()) throw InvalidArgument("pinned node/value size mismatch");
  const std::size_t n = size_of(ops);
  const auto& opts = scen.newton;

  SiState x = guess ? *guess : current;
  x.t = current.t + scen.h;
  std::vector<bool> pinned(2 * n, false);
  for (std::size_t k = 0; k < pinned_nodes.size(); ++k) {
    if (pinned_nodes[k] >= n) throw InvalidArgument("pinned node out of range");
    pinned[n + pinned_nodes[k]] = true;
    x.i[pinned_nodes[k]] = pinned_values[k];
  }

  const auto b = explicit_part(ops, current, scen);
  double b_norm = 0.0;
  for (std::size_t k = 0; k < 2 * n; ++k) {
    if (!pinned[k]) b_norm += b[k] * b[k];
  }
  b_norm = std::sqrt(b_norm);
  const double scale = b_norm > 0.0 ? b_norm : 1.0;

  auto residual_of = [&](const SiState& s, std::vector<double>& r) {
    r = implicit_part(ops, s, scen);
    double acc = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      r[k] = pinned[k] ? 0.0 : r[k] - b[k];
      acc += r[k] * r[k];
    }
    return std::sqrt(acc) / scale;
  };

  auto jac = jacobian_pattern(ops);
  std::vector<double> r;
  double res = residual_of(x, r);
  NewtonReport rep;
  rep.history.push_back(res);
  SolverOptions lin{opts.linear_tol, 0};
  while (!(res <= opts.tol)) {
    if (!std::isfinite(res)) throw NumericalError("Newton residual is not finite");
    if (rep.iterations == opts.max_iter) {
      rep.residual = res;
      if (report) *report = rep;
      throw NumericalError("Newton did not converge after " + std::to_string(opts.max_iter) +
                           " iterations (residual " + std::to_string(res) + ")");
    }
    fill_jacobian(ops, x, scen, jac);
    const auto& off = jac.offsets();
    const auto& col = jac.columns();
    auto& val = jac.values();
    for (std::size_t row = 0; row < 2 * n; ++row) {
      for (std::size_t k = off[row]; k < off[row + 1]; ++k) {
        if (pinned[row]) {
          val[k] = col[k] == row ? 1.0 : 0.0;
        } else if (pinned[col[k]]) {
          val[k] = 0.0;
        }
      }
    }
    for (auto& v : r) v = -v;
    const auto sol = solve_bicgstab(jac, r, lin);
    if (!sol.report.converged && !(sol.report.residual < 1.0)) {
      throw NumericalError("Newton linear solve failed (relative residual " + std::to_string(sol.report.residual) + ")");
    }
    for (std::size_t k = 0; k < n; ++k) {
      x.s[k] += opts.eta * sol.x[k];
      if (!pinned[n + k]) x.i[k] += opts.eta * sol.x[n + k];
    }
    ++rep.iterations;
    res = residual_of(x, r);
    rep.history.push_back(res);
  }
  rep.residual = res;
  rep.converged = true;
  if (report) *report = rep;
  return x;
}

void si_seed_nodes(const Mesh& mesh, const SiScenario& scen, double t, std::vector<std::size_t>& nodes,
                   std::vector<double>& values) {
  nodes.clear();
  values.clear();
  if (scen.seeds.empty()) return;
  for (auto node : mesh.boundary_nodes()) {
    for (const auto& w : scen.seeds) {
      if (window_active(w, mesh.nodes()[node], t)) {
        nodes.push_back(node);
        values.push_back(w.value);
        break;
      }
    }
  }
}

SiState si_initial_state(const Mesh& mesh, const SiScenario& scen) {
  SiState s;
  s.s.assign(mesh.node_count(), scen.initial_s);
  s.i.assign(mesh.node_count(), scen.initial_i);
  s.t = 0.0;
  return s;
}

FieldSeries run_si_scenario(const Mesh& mesh, const SiScenario& scen) {
  scen.validate();
  const auto ops = build_si_operators(mesh, scen);
  const std::size_t n = mesh.node_count();
  FieldSeries series;
  series.id = scen.id;
  series.node_count = n;
  series.components = 2;
  series.meta = {{"kind", "si"}, {"components", {"S", "I"}}, {"h", scen.h}};
  series.times.reserve(scen.steps + 1);
  series.states.reserve(scen.steps + 1);

  auto pack = [n](const SiState& s) {
    std::vector<double> v(2 * n);
    std::copy(s.s.begin(), s.s.end(), v.begin());
    std::copy(s.i.begin(), s.i.end(), v.begin() + static_cast<std::ptrdiff_t>(n));
    return v;
  };

  SiState state = si_initial_state(mesh, scen);
  series.push(state.t, pack(state));
  std::vector<std::size_t> nodes;
  std::vector<double> values;
  SiState previous = state;
  SiState guess = state;
  for (std::size_t k = 0; k < scen.steps; ++k) {
    const double t_next = static_cast<double>(k + 1) * scen.h;
    si_seed_nodes(mesh, scen, t_next, nodes, values);
    // Linear extrapolation from the last two states.
    for (std::size_t j = 0; j < n; ++j) {
      guess.s[j] = 2.0 * state.s[j] - previous.s[j];
      guess.i[j] = 2.0 * state.i[j] - previous.i[j];
    }
    previous = state;
    try {
      state = newton_solve(ops, state, scen, nodes, values, nullptr, &guess);
    } catch (const NumericalError& e) {
      throw NumericalError("scenario '" + scen.id + "', step " + std::to_string(k + 1) + ": " + e.what());
    }
    state.t = t_next;
    series.push(state.t, pack(state));
  }
  return series;
}

}  // namespace stgen
