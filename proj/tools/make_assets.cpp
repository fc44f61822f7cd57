// Regenerates the shipped meshes, probe sets and scenario configs under data/.
//
//   make_assets <data-dir>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgen/dynamics.hpp"
#include "stgen/error.hpp"
#include "stgen/mesh.hpp"
#include "stgen/pde_advection.hpp"
#include "stgen/pde_si.hpp"
#include "stgen/pde_wave.hpp"
#include "stgen/probe_graph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stgen;

namespace {

constexpr double kGermanySpacing = 13000.0;
constexpr double kCoastSpacing = 12000.0;
constexpr std::size_t kGermanyProbes = 400;
constexpr std::size_t kGermanyPairs = 1044;
constexpr std::size_t kCoastProbes = 325;

std::vector<Point2> read_outline(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot read " + p.string());
  std::string line;
  std::getline(in, line);
  if (line != "x,y") throw ParseError(p.string() + ": expected header 'x,y'");
  std::vector<Point2> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = line.find(',');
    out.push_back({std::stod(line.substr(0, c)), std::stod(line.substr(c + 1))});
  }
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ParseError("cannot write " + p.string());
}

double boundary_distance(const std::vector<Point2>& ring, Point2 p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    d = std::min(d, segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
  }
  return d;
}

bool inside_mesh(const Mesh& mesh, Point2 p) {
  try {
    locate_points(mesh, PointSet({p}, {"probe"}));
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

std::string probe_id(const char* prefix, std::size_t i) {
  std::ostringstream s;
  s << prefix << std::setw(3) << std::setfill('0') << i;
  return s.str();
}

// Dart throwing inside the polygon with a minimum separation.
PointSet scatter(const std::vector<Point2>& ring, const Mesh& mesh, std::size_t count, double min_sep,
                 double min_boundary, std::uint64_t seed, const char* prefix) {
  std::mt19937_64 rng(seed);
  const auto box = bounding_box(ring);
  std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x);
  std::uniform_real_distribution<double> uy(box.lo.y, box.hi.y);
  std::vector<Point2> pts;
  std::size_t attempts = 0;
  while (pts.size() < count) {
    if (++attempts > 2000000) throw NumericalError("could not place all probe points");
    const Point2 p{std::round(ux(rng)), std::round(uy(rng))};
    if (!point_in_polygon(ring, p) || boundary_distance(ring, p) < min_boundary) continue;
    bool ok = true;
    for (const auto& q : pts) {
      if (distance(p, q) < min_sep) {
        ok = false;
        break;
      }
    }
    if (!ok || !inside_mesh(mesh, p)) continue;
    pts.push_back(p);
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < count; ++i) ids.push_back(probe_id(prefix, i));
  return PointSet(pts, ids);
}

bool connected(std::size_t n, const std::vector<std::array<std::size_t, 2>>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

// Delaunay edges inside the outline, thinned from the longest down to `target`
// while the graph stays connected.
std::vector<IdPair> region_pairs(const PointSet& ps, const std::vector<Point2>& ring, std::size_t target) {
  auto edges = triangle_edges(delaunay(ps));
  std::erase_if(edges, [&](const auto& e) {
    const Point2 mid = 0.5 * (ps.points()[e[0]] + ps.points()[e[1]]);
    return !point_in_polygon(ring, mid);
  });
  if (edges.size() < target) {
    throw NumericalError("only " + std::to_string(edges.size()) + " interior Delaunay edges, need " +
                         std::to_string(target));
  }
  auto length = [&](const std::array<std::size_t, 2>& e) { return distance(ps.points()[e[0]], ps.points()[e[1]]); };
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return length(edges[a]) > length(edges[b]); });
  std::vector<bool> removed(edges.size(), false);
  std::size_t remaining = edges.size();
  for (auto idx : order) {
    if (remaining == target) break;
    removed[idx] = true;
    std::vector<std::array<std::size_t, 2>> kept;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!removed[i]) kept.push_back(edges[i]);
    }
    if (connected(ps.size(), kept)) {
      --remaining;
    } else {
      removed[idx] = false;
    }
  }
  if (remaining != target) throw NumericalError("cannot thin the pair graph to the target size");
  std::vector<IdPair> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!removed[i]) out.push_back({ps.ids()[edges[i][0]], ps.ids()[edges[i][1]]});
  }
  return out;
}

// r and D rows of the SI parameter table; D is given in units of 10⁸ m²/day.
std::vector<SiScenario> si_suite() {
  const double f5 = 5e-6;
  const std::vector<SinusoidalField> r_rows = {
      SinusoidalField::constant(0.6),
      {1.0, 0.2, f5, f5},
      {0.7, 0.6, f5, f5},
      {0.5, 0.3, 2e-6, f5},
      {1.1, 0.1, 8e-6, f5},
  };
  const std::vector<SinusoidalField> d_rows = {
      SinusoidalField::constant(2e8),
      {1e8, 0.1e8, f5, f5},
      SinusoidalField::constant(3e8),
      SinusoidalField::constant(0.8e8),
      {1e8, 0.2e8, f5, f5},
  };
  // Seeding patch on the south-western border.
  BoundaryWindow seed;
  seed.start = 0.0;
  seed.end = 10.5;
  seed.value = 0.05;
  seed.region.x_max = 3.36e6;
  seed.region.y_min = 5.30e6;
  seed.region.y_max = 5.46e6;

  std::vector<SiScenario> out;
  for (std::size_t d = 0; d < d_rows.size(); ++d) {
    for (std::size_t r = 0; r < r_rows.size(); ++r) {
      SiScenario s;
      s.id = std::to_string(25 * d + 5 * r);
      s.r = r_rows[r];
      s.diffusion = d_rows[d];
      s.seeds = {seed};
      out.push_back(s);
    }
  }
  return out;
}

AdvScenario advection_suite() {
  AdvScenario scen;
  scen.id = "advection";
  const std::vector<std::vector<Pulse>> pulses = {
      {{0.0, 0.1, -32.0}, {0.8, 0.9, -22.0}},
      {{1.3, 1.4, -27.0}},
      {{2.1, 2.2, -32.0}, {2.8, 2.9, -42.0}},
      {{3.3, 3.4, -28.0}},
      {{4.1, 4.2, -38.0}, {4.8, 4.9, -33.0}},
      {{5.3, 5.4, -30.0}},
  };
  const std::vector<std::array<double, 2>> rects = {{3.45, 5.4}, {3.6, 5.6}, {3.45, 5.8}};
  const std::vector<VelocityField> winds = {
      VelocityField::constant(-0.5, 0.5),
      VelocityField::affine(0.6, -1.0, 55.0, 1),
      VelocityField::affine(0.5, 2.5, -1.375, 1),
  };
  for (std::size_t id = 1; id <= 54; ++id) {
    const std::size_t row = (id - 1) % 18;
    AdvectionBlock b;
    b.id = std::to_string(id);
    b.source.a = rects[row / 6][0];
    b.source.b = rects[row / 6][1];
    b.source.pulses = pulses[row % 6];
    // Pulse times count from the start of each six-block cycle.
    b.source.time_origin = static_cast<double>((id - 1) / 6) * 6.0 * static_cast<double>(scen.steps_per_block) * scen.h;
    b.beta = winds[(id - 1) / 18];
    scen.blocks.push_back(b);
  }
  return scen;
}

WaveScenario wave_suite() {
  WaveScenario scen;
  scen.id = "wave";
  BoundaryWindow w1, w2, w3;
  w1.start = 0.0;
  w1.end = 50000.0;
  w1.region.y_min = 6.2e6;
  w1.region.x_max = 3.4e6;
  w1.value = 0.8;
  w2.start = 1000000.0;
  w2.end = 1100000.0;
  w2.region.y_min = 6.2e6;
  w2.region.x_min = 3.8e6;
  w2.value = 1.0;
  w3.start = 1800000.0;
  w3.end = 1900000.0;
  w3.region.y_min = 6.2e6;
  w3.region.x_min = 3.5e6;
  w3.region.x_max = 3.6e6;
  w3.value = 0.9;
  scen.windows = {w1, w2, w3};
  return scen;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_assets <data-dir>\n";
    return 2;
  }
  try {
    const fs::path data(argv[1]);
    const auto germany = read_outline(data / "geometry" / "germany_outline.csv");
    const auto coast = read_outline(data / "geometry" / "coast_outline.csv");

    const Mesh gmesh = generate_polygon_mesh(germany, kGermanySpacing);
    const Mesh cmesh = generate_polygon_mesh(coast, kCoastSpacing);
    write_text(data / "meshes" / "germany.msh", write_msh(gmesh));
    write_text(data / "meshes" / "coast.msh", write_msh(cmesh));
    std::cout << "germany.msh: " << gmesh.node_count() << " nodes, " << gmesh.triangle_count() << " triangles\n";
    std::cout << "coast.msh: " << cmesh.node_count() << " nodes, " << cmesh.triangle_count() << " triangles\n";

    const auto gpoints = scatter(germany, gmesh, kGermanyProbes, 18000.0, 5000.0, 20240601, "g");
    const auto pairs = region_pairs(gpoints, germany, kGermanyPairs);
    write_text(data / "points" / "germany_400.csv", write_points_csv(gpoints));
    write_text(data / "points" / "germany_pairs.csv", write_pairs_csv(pairs));
    const auto cpoints = scatter(coast, cmesh, kCoastProbes, 1.0, 3000.0, 20240602, "c");
    write_text(data / "points" / "coast_325.csv", write_points_csv(cpoints));
    std::cout << "probes: " << gpoints.size() << " (" << pairs.size() << " pairs), " << cpoints.size() << "\n";

    for (const auto& s : si_suite()) {
      std::ostringstream name;
      name << "si_" << std::setw(3) << std::setfill('0') << std::stoi(s.id) << ".json";
      write_text(data / "configs" / "si" / name.str(), json(s).dump(2) + "\n");
    }
    write_text(data / "configs" / "advection" / "advection.json", json(advection_suite()).dump(2) + "\n");
    write_text(data / "configs" / "wave" / "wave.json", json(wave_suite()).dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
