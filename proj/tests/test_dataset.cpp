#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "stgen/dataset.hpp"
#include "stgen/error.hpp"

using namespace stgen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("stgen_test_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TemporalGraphDataset random_dataset(std::size_t t, std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Point2> pts;
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < n; ++j) {
    pts.push_back({static_cast<double>(j) * 1000.0, static_cast<double>(j * j) * 10.0});
    ids.push_back("n" + std::to_string(j));
  }
  TemporalGraphDataset ds;
  ds.graph = build_graph_delaunay(PointSet(pts, ids));
  ds.values = Tensor3(t, n, d);
  // Values representable in float32 so the round trip is exact.
  for (double& v : ds.values.data) v = static_cast<float>(u(rng));
  ds.segments = {0, t / 2, t};
  for (std::size_t k = 0; k < d; ++k) ds.components.push_back("c" + std::to_string(k));
  return ds;
}

std::vector<std::size_t> uniform_segments(std::size_t k, std::size_t len) {
  std::vector<std::size_t> s(k + 1);
  for (std::size_t i = 0; i <= k; ++i) s[i] = i * len;
  return s;
}

}  // namespace

TEST_CASE("dataset round trip is exact") {
  auto ds = random_dataset(10, 5, 2, 1);
  ds.meta = {{"source", "unit"}};
  const auto dir = scratch("roundtrip");
  write_dataset(ds, dir, true);
  CHECK(fs::exists(dir / "values.csv"));
  CHECK(fs::file_size(dir / "dataset.stg.f32") == 10 * 5 * 2 * 4);
  const auto back = read_dataset(dir);
  CHECK(back.values == ds.values);
  CHECK(back.segments == ds.segments);
  CHECK(back.components == ds.components);
  CHECK(back.graph.nodes.ids() == ds.graph.nodes.ids());
  CHECK(back.graph.nodes.points() == ds.graph.nodes.points());
  CHECK(back.graph.edges == ds.graph.edges);
  CHECK(back.meta == ds.meta);
  // Header is a single line of JSON.
  std::ifstream in(dir / "dataset.stg.json");
  std::string first, rest;
  std::getline(in, first);
  std::getline(in, rest);
  CHECK(nlohmann::json::parse(first)["shape"] == nlohmann::json::array({10, 5, 2}));
  CHECK(rest.empty());
}

TEST_CASE("truncated payload is reported with the header shape") {
  auto ds = random_dataset(4, 3, 1, 2);
  const auto dir = scratch("truncated");
  write_dataset(ds, dir);
  fs::resize_file(dir / "dataset.stg.f32", 20);
  try {
    read_dataset(dir);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("[4, 3, 1]") != std::string::npos);
  }
}

TEST_CASE("normalization") {
  auto ds = random_dataset(6, 4, 2, 3);
  ds.values.data[5] = -4.0;
  const auto nd = normalize(ds);
  double m = 0.0;
  for (double v : nd.values.data) m = std::max(m, std::abs(v));
  CHECK(m == 1.0);
  CHECK(nd.scale == 4.0);
  CHECK(nd.normalized);
  const auto back = denormalize(nd);
  for (std::size_t k = 0; k < ds.values.data.size(); ++k)
    CHECK(static_cast<float>(back.values.data[k]) == static_cast<float>(ds.values.data[k]));
  std::fill(ds.values.data.begin(), ds.values.data.end(), 0.0);
  CHECK_THROWS_AS(normalize(ds), InvalidArgument);
}

TEST_CASE("split snaps to segment boundaries") {
  const auto s = split(uniform_segments(25, 364));
  CHECK(s.train.length() == 6916);
  CHECK(s.val.length() == 1092);
  CHECK(s.test.length() == 1092);
  CHECK(s.train.begin == 0);
  CHECK(s.val.begin == s.train.end);
  CHECK(s.test.begin == s.val.end);
  CHECK(s.test.end == 9100);

  const auto all = split(uniform_segments(25, 364), {1.0, 0.0, 0.0});
  CHECK(all.train.length() == 9100);
  CHECK(all.val.length() == 0);
  CHECK(all.test.length() == 0);

  CHECK_THROWS_AS(split(uniform_segments(1, 364)), InvalidArgument);
  CHECK_THROWS_AS(split(uniform_segments(25, 364), {0.5, 0.2, 0.2}), InvalidArgument);
}

TEST_CASE("split parts are disjoint and cover every step") {
  for (std::size_t k : {9u, 25u, 54u, 100u}) {
    const auto segs = uniform_segments(k, 80);
    const auto s = split(segs);
    CHECK(s.train.length() + s.val.length() + s.test.length() == segs.back());
    CHECK(s.train.end == s.val.begin);
    CHECK(s.val.end == s.test.begin);
    for (const auto* p : {&s.train, &s.val, &s.test}) {
      CHECK(p->segments.front() == p->begin);
      CHECK(p->segments.back() == p->end);
      for (auto b : p->segments) CHECK(std::find(segs.begin(), segs.end(), b) != segs.end());
    }
  }
}

TEST_CASE("window counting") {
  const SplitPart one{0, 364, {0, 364}};
  CHECK(window_origins(one).size() == 337);
  CHECK(window_origins(SplitPart{0, 27, {0, 27}}).empty());
  CHECK(window_origins(one, 14, 14, 7).size() == 49);
  const SplitPart three{364, 364 * 4, {364, 728, 1092, 1456}};
  const auto origins = window_origins(three);
  CHECK(origins.size() == 3 * 337);
  // No window crosses a segment boundary.
  for (auto o : origins) {
    const auto seg = std::upper_bound(three.segments.begin(), three.segments.end(), o) - 1;
    CHECK(o + 28 <= *(seg + 1));
  }
}

TEST_CASE("window samples slice the tensor") {
  Tensor3 x(60, 2, 1);
  for (std::size_t t = 0; t < 60; ++t) x(t, 0, 0) = x(t, 1, 0) = static_cast<double>(t);
  const auto w = windows(x, SplitPart{0, 60, {0, 30, 60}}, 14, 14, 1);
  REQUIRE(w.size() == 6);
  CHECK(w[3].origin == 30);
  CHECK(w[3].context(0, 0, 0) == 30.0);
  CHECK(w[3].target(0, 1, 0) == 44.0);
  CHECK(w[3].target.t == 14);
}

TEST_CASE("gaussian noise") {
  Tensor3 x(50, 40, 2);
  NoiseSpec zero{NoiseSpec::Kind::gaussian, 0.0, 0.1, 5, false};
  CHECK(add_noise(x, zero) == x);
  NoiseSpec g{NoiseSpec::Kind::gaussian, 0.1, 0.1, 42, false};
  const auto a = add_noise(x, g), b = add_noise(x, g);
  CHECK(a == b);
  double mean = 0.0;
  for (double v : a.data) mean += v;
  mean /= static_cast<double>(a.data.size());
  CHECK(std::abs(mean) <= 4 * 0.1 / std::sqrt(static_cast<double>(a.data.size())));
  g.seed = 43;
  CHECK_FALSE(add_noise(x, g) == a);
}

TEST_CASE("dropout zeroes an exact fraction") {
  Tensor3 x(10, 50, 2);
  std::fill(x.data.begin(), x.data.end(), 1.0);
  NoiseSpec d{NoiseSpec::Kind::dropout, 0.1, 0.1, 7, false};
  const auto y = add_noise(x, d);
  CHECK(std::count(y.data.begin(), y.data.end(), 0.0) == 100);
  CHECK(add_noise(x, d) == y);
  d.bernoulli = true;
  const auto z = add_noise(x, d);
  const auto zeros = std::count(z.data.begin(), z.data.end(), 0.0);
  CHECK(zeros > 50);
  CHECK(zeros < 150);
}

TEST_CASE("noise spec json") {
  const NoiseSpec s{NoiseSpec::Kind::dropout, 0.2, 0.3, 99, true};
  const nlohmann::json j = s;
  const auto back = j.get<NoiseSpec>();
  CHECK(back.kind == s.kind);
  CHECK(back.rate == 0.3);
  CHECK(back.seed == 99);
  CHECK(back.bernoulli);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"kind":"salt"})").get<NoiseSpec>(), ParseError);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"kind":"dropout","rate":1.5})").get<NoiseSpec>(), ParseError);
}

TEST_CASE("rmse") {
  Tensor3 t(14, 3, 2);
  std::iota(t.data.begin(), t.data.end(), 0.0);
  CHECK(rmse({t}, {t}) == 0.0);
  Tensor3 off = t;
  for (double& v : off.data) v += 0.5;
  CHECK(rmse({off, off}, {t, t}) == doctest::Approx(0.5).epsilon(1e-15));
  Tensor3 checker = t;
  for (std::size_t k = 0; k < checker.data.size(); ++k) checker.data[k] += (k % 2 ? 1.0 : -1.0);
  CHECK(rmse({checker}, {t}) == doctest::Approx(1.0).epsilon(1e-15));
  const auto ph = rmse_per_horizon({checker}, {t});
  CHECK(ph.size() == 14);
  for (double v : ph) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(rmse({t}, {Tensor3(13, 3, 2)}), InvalidArgument);
}

TEST_CASE("repetition forecast") {
  Tensor3 c(14, 3, 1);
  for (std::size_t j = 0; j < 3; ++j) c(13, j, 0) = 2.5;
  const auto f = repetition_forecast(c);
  CHECK(f.t == 14);
  for (double v : f.data) CHECK(v == 2.5);
  Tensor3 c2 = c;
  for (std::size_t t = 0; t < 13; ++t) c2(t, 1, 0) = 99.0;
  CHECK(repetition_forecast(c2) == f);
  CHECK_THROWS_AS(repetition_forecast(Tensor3(0, 3, 1)), InvalidArgument);
}

TEST_CASE("repetition rmse on clean data is deterministic and bounded by the degenerate case") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Tensor3 x(364, 6, 1);
  double acc = 0.0;
  for (double& v : x.data) v = (acc += nd(rng));
  const auto w = windows(x, SplitPart{0, 364, {0, 364}});
  std::vector<Tensor3> pred, target, last_frame;
  for (const auto& s : w) {
    pred.push_back(repetition_forecast(s.context));
    target.push_back(s.target);
    last_frame.push_back(repetition_forecast(s.context));
  }
  const double a = rmse(pred, target);
  CHECK(a == rmse(pred, target));
  CHECK(a >= rmse(pred, last_frame));
}
