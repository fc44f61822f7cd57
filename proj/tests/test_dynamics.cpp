#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stgen/dynamics.hpp"
#include "stgen/error.hpp"
#include "stgen/pde_advection.hpp"
#include "stgen/pde_si.hpp"
#include "stgen/pde_wave.hpp"

using namespace stgen;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(STGEN_DATA_DIR) / "configs";

json load(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

AdvScenario shipped_advection() { return load(kConfigs / "advection" / "advection.json").get<AdvScenario>(); }

}  // namespace

TEST_CASE("sinusoidal fields") {
  const auto si0 = load(kConfigs / "si" / "si_000.json").get<SiScenario>();
  for (Point2 x : {Point2{3.3e6, 5.3e6}, Point2{3.7e6, 6.0e6}}) {
    CHECK(eval_field(si0.r, x) == 0.6);
    CHECK(eval_field(si0.diffusion, x) == 2e8);
  }
  const SinusoidalField f{1.0, 0.2, 5e-6, 5e-6};
  CHECK(eval_field(f, {0.0, 5.4e6}) == 1.0);
  CHECK(eval_field(f, {1e5, 1e5}) == doctest::Approx(1.0 + 0.2 * std::pow(std::sin(0.5 * 3.141592653589793), 2)));
}

TEST_CASE("box source of the first advection row") {
  const auto scen = shipped_advection();
  REQUIRE(scen.blocks.size() == 54);
  const BoxSource& s = scen.blocks[0].source;
  CHECK(s.a == 3.45);
  CHECK(s.b == 5.4);
  const Point2 inside{3.46e6, 5.42e6};
  CHECK(s.contains(inside));
  CHECK(eval_source(s, inside, 0.05e10) == doctest::Approx(-32e-10).epsilon(1e-14));
  CHECK(eval_source(s, inside, 0.5e10) == 0.0);
  CHECK(eval_source(s, {3.0e6, 5.42e6}, 0.05e10) == 0.0);
}

TEST_CASE("source integrates to its pulse weights over one block") {
  const auto scen = shipped_advection();
  for (std::size_t b : {0u, 7u, 20u}) {
    const BoxSource& s = scen.blocks[b].source;
    const auto box = s.rectangle();
    const double area = (box.hi.x - box.lo.x) * (box.hi.y - box.lo.y);
    double expected = 0.0;
    for (const auto& p : s.pulses) expected += (p.end - p.start) * p.amplitude;
    // Pulse lengths are in rescaled time (units of 1e10 s), amplitudes carry 1e-10.
    expected *= area;
    // Brute-force midpoint sampling in time over the cycle the block belongs to.
    const double t0 = s.time_origin;
    const double span = 6 * 80 * scen.h;
    const std::size_t samples = 480000;
    const double dt = span / static_cast<double>(samples);
    const Point2 c = 0.5 * (box.lo + box.hi);
    double integral = 0.0;
    for (std::size_t k = 0; k < samples; ++k) integral += eval_source(s, c, t0 + (static_cast<double>(k) + 0.5) * dt);
    integral *= dt * area;
    CHECK(integral == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("velocity fields") {
  const auto v = VelocityField::constant(-0.5, 0.5);
  const Point2 a = eval_velocity(v, {3.5e6, 5.5e6});
  CHECK(a.x == doctest::Approx(-0.5e-4));
  CHECK(a.y == doctest::Approx(0.5e-4));
  const auto w = VelocityField::affine(0.6, -1.0, 55.0, 1);
  const Point2 b = eval_velocity(w, {3.5e6, 5.5e6});
  CHECK(b.x == doctest::Approx(0.6e-4));
  CHECK(b.y == doctest::Approx((55.0 - 5.5) * 1e-4));
}

TEST_CASE("boundary windows of the wave scenario") {
  const auto scen = load(kConfigs / "wave" / "wave.json").get<WaveScenario>();
  REQUIRE(scen.windows.size() == 3);
  const auto& w1 = scen.windows[0];
  CHECK(window_active(w1, {3.3e6, 6.3e6}, 25000));
  CHECK(w1.value == 0.8);
  CHECK_FALSE(window_active(w1, {3.3e6, 6.3e6}, 60000));
  CHECK_FALSE(window_active(w1, {3.5e6, 6.3e6}, 25000));
  CHECK(scen.windows[1].value == 1.0);
  CHECK(scen.windows[2].value == 0.9);
}

TEST_CASE("every shipped config round-trips through json") {
  std::size_t si_count = 0;
  for (const auto& e : std::filesystem::directory_iterator(kConfigs / "si")) {
    const json j = load(e.path());
    const auto s = j.get<SiScenario>();
    const json j2 = s;
    CHECK(j2 == j);
    CHECK(j2.get<SiScenario>().r == s.r);
    ++si_count;
  }
  CHECK(si_count == 25);
  const json a = load(kConfigs / "advection" / "advection.json");
  const json a2 = a.get<AdvScenario>();
  CHECK(a2 == a);
  CHECK(a2.get<AdvScenario>().blocks == a.get<AdvScenario>().blocks);
  const json w = load(kConfigs / "wave" / "wave.json");
  const json w2 = w.get<WaveScenario>();
  CHECK(w2 == w);
}

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(json::parse(R"({"kind":"swirl","c":1})").get<VelocityField>(), ParseError);
  CHECK_THROWS_AS(json::parse(R"({"start":2,"end":1,"value":1})").get<BoundaryWindow>(), ParseError);
  CHECK_THROWS_AS(json::parse(R"({"a":1,"b":1,"pulses":[{"start":0,"end":1,"amplitude":1},{"start":0.5,"end":2,"amplitude":1}]})")
                      .get<BoxSource>(),
                  ParseError);
  CHECK_THROWS_AS(json::parse(R"({"x_low":1})").get<Region>(), ParseError);
}
