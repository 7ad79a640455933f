#include <catch2/catch_amalgamated.hpp>
#include <Eigen/SVD>
#include <cmath>
#include <set>

#include "entsim/counting.hpp"

using namespace entsim;

TEST_CASE("tomographic set is informationally complete") {
  const auto set = tomographic_set();
  REQUIRE(set.size() == 16);
  std::set<std::pair<std::string, std::string>> labels;
  for (const auto& p : set) labels.insert({p.ket1, p.ket2});
  CHECK(labels.size() == 16);
  CHECK(labels.count({"H", "H"}) == 1);
  CHECK(labels.count({"H", "V"}) == 1);
  CHECK(labels.count({"V", "H"}) == 1);
  CHECK(labels.count({"V", "V"}) == 1);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(measurement_matrix(set));
  CHECK(svd.singularValues()(15) > 1e-3);
}

TEST_CASE("named kets") {
  CHECK((named_ket("H") - Vector2c(1, 0)).norm() < 1e-15);
  CHECK((named_ket("deg:0") - named_ket("H")).norm() < 1e-15);
  CHECK((named_ket("deg:90") - named_ket("V")).norm() < 1e-12);
  CHECK((named_ket("deg:45") - named_ket("D")).norm() < 1e-12);
  CHECK(std::abs(named_ket("R").dot(named_ket("R")) - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(named_ket("R").dot(named_ket("L"))) < 1e-15);
  CHECK_THROWS_AS(named_ket("X"), DomainError);
}

TEST_CASE("count simulation is deterministic in the seed") {
  const auto rho = channel_state(0.696);
  const auto set = tomographic_set();
  const NoiseModel noise{10000.0, 0.0, 42};
  const auto a = simulate_counts(rho, set, noise);
  const auto b = simulate_counts(rho, set, noise);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].count == b[i].count);
    CHECK(a[i].expected == b[i].expected);
  }
  const auto c = simulate_counts(rho, set, {10000.0, 0.0, 43});
  bool any_differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_differ |= (a[i].count != c[i].count);
  CHECK(any_differ);
}

TEST_CASE("orthogonal projector draws zero counts without background") {
  Matrix4c hh = Matrix4c::Zero();
  hh(0, 0) = 1.0;
  const DensityMatrix4 rho(hh);
  const std::vector<ProjectorSpec> proj = {make_projector("V", "V")};
  const auto records = simulate_counts(rho, proj, {1e6, 0.0, 1});
  CHECK(records[0].count == 0);
  CHECK(records[0].expected == 0.0);

  const auto with_bg = simulate_counts(rho, proj, {1e6, 50.0, 1});
  CHECK(with_bg[0].expected == Catch::Approx(50.0));
  CHECK(with_bg[0].count > 0);
}

TEST_CASE("poisson sample mean matches the Born-rule mean") {
  // (45, 45) on the Bell state: p = 1/2, mean = 5e5 at N = 1e6.
  const auto rho = channel_state(1.0);
  const std::vector<ProjectorSpec> proj = {make_projector("deg:45", "deg:45")};
  const int n_seeds = 100;
  double sum = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    const auto records = simulate_counts(rho, proj, {1e6, 0.0, static_cast<std::uint64_t>(s)});
    CHECK(records[0].expected == Catch::Approx(5e5));
    sum += static_cast<double>(records[0].count);
  }
  const double mean = sum / n_seeds;
  const double se = std::sqrt(5e5 / n_seeds);
  CHECK(std::abs(mean - 5e5) < 3.0 * se);
}

TEST_CASE("visibility measurement") {
  const auto rho = channel_state(0.881);
  const int n_seeds = 100;
  double sum = 0.0, first_sigma = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    const auto [v, sigma] = measure_visibility(rho, {1e5, 0.0, static_cast<std::uint64_t>(s)});
    if (s == 0) first_sigma = sigma;
    CHECK(sigma > 0.0);
    CHECK(sigma < 0.02);
    sum += v;
  }
  const double mean = sum / n_seeds;
  // Sample mean within 3 standard errors of the true visibility; the bias of
  // the ratio estimator is O(1/N), far below the Monte Carlo resolution.
  CHECK(std::abs(mean - 0.881) < 3.0 * first_sigma / std::sqrt(static_cast<double>(n_seeds)));

  const auto [v0, sigma0] = measure_visibility(channel_state(0.0), {1e5, 0.0, 3});
  CHECK(std::abs(v0) < 4.0 * sigma0);

  CHECK_THROWS_AS(measure_visibility(rho, {0.0, 0.0, 1}), DomainError);
}

TEST_CASE("chsh simulation converges to the analytic value") {
  const auto rho = channel_state(0.696);
  const auto settings = canonical_chsh_settings();
  const double analytic = chsh(rho, settings);
  const auto estimate = simulate_chsh(rho, settings, {1e6, 0.0, 42});
  CHECK(estimate.sigma > 0.0);
  CHECK(std::abs(estimate.b - analytic) < 4.0 * estimate.sigma);
  CHECK(estimate.significance == Catch::Approx((estimate.b - 2.0) / estimate.sigma));

  const auto again = simulate_chsh(rho, settings, {1e6, 0.0, 42});
  CHECK(estimate.b == again.b);
  CHECK(estimate.sigma == again.sigma);
}

TEST_CASE("chsh sigma scales as one over sqrt(N)") {
  const auto rho = channel_state(0.696);
  const auto settings = canonical_chsh_settings();
  const auto small = simulate_chsh(rho, settings, {1e4, 0.0, 7});
  const auto large = simulate_chsh(rho, settings, {1e6, 0.0, 7});
  CHECK(small.sigma / large.sigma == Catch::Approx(10.0).epsilon(0.15));
}

TEST_CASE("noise model validation") {
  CHECK_THROWS_AS((NoiseModel{-1.0, 0.0, 0}).validate(), DomainError);
  CHECK_THROWS_AS((NoiseModel{1.0, -1.0, 0}).validate(), DomainError);
}

TEST_CASE("poisson generator moments") {
  // Covers both sampling branches (Knuth chunking and the normal tail).
  for (const double mean : {3.0, 200.0, 5000.0}) {
    CounterRng rng(99, static_cast<std::uint64_t>(mean));
    const int n = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(mean));
      sum += x;
      sumsq += x * x;
    }
    const double sample_mean = sum / n;
    const double sample_var = sumsq / n - sample_mean * sample_mean;
    CHECK(std::abs(sample_mean - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(sample_var == Catch::Approx(mean).epsilon(0.1));
  }
  CounterRng rng(1, 0);
  CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-1.0), DomainError);
}
