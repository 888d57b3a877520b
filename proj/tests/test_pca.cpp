#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "stam/errors.hpp"
#include "stam/pca.hpp"
#include "stam/rng.hpp"

namespace {

// Noiseless points along (1,2): one dominant direction.
std::vector<std::vector<double>> line_points() {
  std::vector<std::vector<double>> pts;
  for (int i = -5; i <= 5; ++i)
    pts.push_back({static_cast<double>(i), 2.0 * i});
  return pts;
}

double dot(const std::vector<double>& a, std::size_t off_a,
           const std::vector<double>& b, std::size_t off_b, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += a[off_a + j] * b[off_b + j];
  return s;
}

}  // namespace

TEST_CASE("a one-dimensional cloud keeps a single component") {
  const auto m = stam::pca_fit(line_points(), 10, 0.9);
  REQUIRE(m.input_dim == 2);
  REQUIRE(m.m == 1);
  REQUIRE(m.mean[0] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(m.mean[1] == Catch::Approx(0.0).margin(1e-12));
  // component is +-(1,2)/sqrt(5)
  const double e0 = 1.0 / std::sqrt(5.0), e1 = 2.0 / std::sqrt(5.0);
  const double sign = m.components[0] > 0 ? 1.0 : -1.0;
  REQUIRE(sign * m.components[0] == Catch::Approx(e0));
  REQUIRE(sign * m.components[1] == Catch::Approx(e1));
  REQUIRE(m.explained[0] == Catch::Approx(1.0));
}

TEST_CASE("projection is the centered dot product with each component") {
  const auto m = stam::pca_fit(line_points(), 10, 0.9);
  const std::vector<double> x{3.0, 6.0};
  const auto y = stam::pca_transform(m, x);
  REQUIRE(y.size() == 1);
  REQUIRE(std::fabs(y[0]) == Catch::Approx(3.0 * std::sqrt(5.0)));
  REQUIRE_THROWS_AS(stam::pca_transform(m, {1.0, 2.0, 3.0}),
                    stam::data_error);
}

TEST_CASE("components are orthonormal") {
  stam::Rng rng(61);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 40; ++i) data.push_back(testutil::random_vec(rng, 6));
  const auto m = stam::pca_fit(data, 6, 1.0);
  for (std::size_t i = 0; i < m.m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = dot(m.components, i * 6, m.components, j * 6, 6);
      REQUIRE(v == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-9));
    }
}

TEST_CASE("variance target picks the component count") {
  // anisotropic 4D Gaussian: variances ~ 100, 25, 1, 0.01
  stam::Rng rng(62);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 4000; ++i)
    data.push_back({10.0 * rng.normal(), 5.0 * rng.normal(), rng.normal(),
                    0.1 * rng.normal()});
  // ratios roughly .79 / .20 / .008 / tiny: 90% needs the first two
  const auto m = stam::pca_fit(data, 10, 0.9);
  REQUIRE(m.m == 2);
  REQUIRE(m.explained[0] > m.explained[1]);
  REQUIRE(m.explained[0] + m.explained[1] >= 0.9);

  // the cap and the sample count both clamp the choice
  REQUIRE(stam::pca_fit(data, 1, 0.9).m == 1);
  const std::vector<std::vector<double>> two(data.begin(), data.begin() + 2);
  REQUIRE(stam::pca_fit(two, 10, 1.0).m <= 2);
}

TEST_CASE("an explicit override pins the component count") {
  stam::Rng rng(63);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 50; ++i) data.push_back(testutil::random_vec(rng, 5));
  REQUIRE(stam::pca_fit(data, 10, 0.9, 3).m == 3);
  REQUIRE(stam::pca_fit(data, 10, 0.9, 99).m == 5);  // clamped to min(n, d)
}

TEST_CASE("reconstruction from all components is lossless") {
  stam::Rng rng(64);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 30; ++i) data.push_back(testutil::random_vec(rng, 4));
  const auto m = stam::pca_fit(data, 4, 1.0, 4);
  REQUIRE(m.m == 4);
  for (const auto& x : data) {
    const auto y = stam::pca_transform(m, x);
    std::vector<double> back = m.mean;
    for (std::size_t i = 0; i < m.m; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        back[j] += y[i] * m.components[i * 4 + j];
    for (std::size_t j = 0; j < 4; ++j)
      REQUIRE(back[j] == Catch::Approx(x[j]).margin(1e-9));
  }
}

TEST_CASE("degenerate inputs are rejected") {
  REQUIRE_THROWS_AS(stam::pca_fit({{1.0, 2.0}}, 5), stam::data_error);
  REQUIRE_THROWS_AS(stam::pca_fit({{1.0}, {1.0, 2.0}}, 5), stam::data_error);
  REQUIRE_THROWS_AS(stam::pca_fit(line_points(), 0), stam::config_error);
}

TEST_CASE("constant data degrades gracefully to one component") {
  const std::vector<std::vector<double>> flat(5, std::vector<double>{3.0, 3.0});
  const auto m = stam::pca_fit(flat, 4, 0.9);
  REQUIRE(m.m == 1);
  REQUIRE(m.explained[0] == 0.0);
  const auto y = stam::pca_transform(m, {3.0, 3.0});
  REQUIRE(y[0] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pca snapshots round-trip and reject other kinds") {
  testutil::TempDir dir("pca");
  const auto m = stam::pca_fit(line_points(), 10, 0.9);
  const auto p = dir.file("m.pca");
  stam::save_pca(p, m);
  const auto back = stam::load_pca(p);
  REQUIRE(back.input_dim == m.input_dim);
  REQUIRE(back.m == m.m);
  REQUIRE(back.mean == m.mean);
  REQUIRE(back.components == m.components);
  REQUIRE(back.explained == m.explained);
  REQUIRE(stam::serialize_pca(back) == stam::serialize_pca(m));

  auto bytes = stam::serialize_pca(m);
  bytes[12] = stam::kSnapshotHierarchy;
  REQUIRE_THROWS_AS(stam::deserialize_pca(bytes), stam::data_error);
}
