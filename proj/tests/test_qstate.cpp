#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <nlohmann/json.hpp>

#include "entsim/bell.hpp"
#include "entsim/io.hpp"
#include "entsim/qstate.hpp"
#include "entsim/rng.hpp"

using namespace entsim;

namespace {

const double kSqrt2 = std::sqrt(2.0);

DensityMatrix4 maximally_mixed() { return DensityMatrix4(Matrix4c::Identity() / 4.0); }

DensityMatrix4 pure_hh() {
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = 1.0;
  return DensityMatrix4(m);
}

/// Coordinate-ascent oracle for the maximal CHSH value: alternate closed-form
/// optimization of (b1, b1') and (b2, b2') from many restarts.
double chsh_max_oracle(const DensityMatrix4& rho) {
  CounterRng rng(7, 0);
  double best = 0.0;
  for (int restart = 0; restart < 24; ++restart) {
    double b1 = 180.0 * rng.uniform(), b1p = 180.0 * rng.uniform();
    double b2 = 180.0 * rng.uniform(), b2p = 180.0 * rng.uniform();
    double value = chsh(rho, {b1, b1p, b2, b2p});
    for (int sweep = 0; sweep < 60; ++sweep) {
      const double before = value;
      auto improve = [&](double& angle) {
        for (double step = 30.0; step > 1e-6; step /= 3.0) {
          bool moved = true;
          while (moved) {
            moved = false;
            for (const double delta : {step, -step}) {
              const double saved = angle;
              angle += delta;
              const double candidate = chsh(rho, {b1, b1p, b2, b2p});
              if (candidate > value + 1e-14) {
                value = candidate;
                moved = true;
              } else {
                angle = saved;
              }
            }
          }
        }
      };
      improve(b1);
      improve(b1p);
      improve(b2);
      improve(b2p);
      if (value - before < 1e-12) break;
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace

TEST_CASE("channel state structure") {
  const auto bell = channel_state(1.0);
  CHECK(bell.matrix()(0, 0).real() == Catch::Approx(0.5));
  CHECK(bell.matrix()(3, 3).real() == Catch::Approx(0.5));
  CHECK(bell.matrix()(3, 0).real() == Catch::Approx(0.5));
  CHECK(bell.matrix()(1, 1) == Complex(0.0, 0.0));
  CHECK(bell.matrix()(2, 2) == Complex(0.0, 0.0));

  const auto mixed = channel_state(0.0);
  CHECK(mixed.matrix()(3, 0) == Complex(0.0, 0.0));
  CHECK(mixed.matrix()(0, 0).real() == Catch::Approx(0.5));

  const auto partial = channel_state(0.696);
  CHECK(partial.matrix()(3, 0).real() == Catch::Approx(0.348));
  CHECK(partial.matrix()(0, 3).real() == Catch::Approx(0.348));

  const auto complex_eps = channel_state(Complex(0.3, 0.4));
  CHECK(complex_eps.matrix()(3, 0) == Complex(0.15, 0.2));
  CHECK(complex_eps.matrix()(0, 3) == Complex(0.15, -0.2));

  CHECK_THROWS_AS(channel_state(1.01), DomainError);
}

TEST_CASE("density matrix validation") {
  Matrix4c bad_trace = Matrix4c::Identity();
  CHECK_THROWS_AS(DensityMatrix4(bad_trace), DomainError);

  Matrix4c not_hermitian = Matrix4c::Identity() / 4.0;
  not_hermitian(0, 1) = Complex(0.1, 0.0);
  CHECK_THROWS_AS(DensityMatrix4(not_hermitian), DomainError);

  Matrix4c not_psd = Matrix4c::Zero();
  not_psd(0, 0) = 1.2;
  not_psd(1, 1) = -0.2;
  CHECK_THROWS_AS(DensityMatrix4(not_psd), DomainError);

  CHECK(maximally_mixed().min_eigenvalue() == Catch::Approx(0.25));
}

TEST_CASE("concurrence of channel states equals |eps|") {
  for (int i = 0; i <= 100; ++i) {
    const double r = static_cast<double>(i) / 100.0;
    CHECK(concurrence_wootters(channel_state(r)) == Catch::Approx(r).margin(1e-10));
  }
  CounterRng rng(11, 0);
  for (int i = 0; i < 100; ++i) {
    const double r = rng.uniform();
    const double phi = 2.0 * kPi * rng.uniform();
    const Complex eps = r * Complex(std::cos(phi), std::sin(phi));
    CHECK(concurrence_wootters(channel_state(eps)) == Catch::Approx(r).margin(1e-10));
  }
  CHECK(concurrence_wootters(maximally_mixed()) == 0.0);
  CHECK(concurrence_wootters(pure_hh()) == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("projector probabilities") {
  const double eps = 0.696;
  const auto rho = channel_state(eps);
  CHECK(projector_probability(rho, {45.0, 45.0}) == Catch::Approx((1.0 + eps) / 4.0));
  CHECK(projector_probability(rho, {45.0, -45.0}) == Catch::Approx((1.0 - eps) / 4.0));
  CHECK(projector_probability(rho, {0.0, 0.0}) == Catch::Approx(0.5));
  CHECK(projector_probability(rho, {0.0, 90.0}) == Catch::Approx(0.0).margin(1e-12));
  CHECK(projector_probability(pure_hh(), {0.0, 0.0}) == Catch::Approx(1.0));

  Vector2c unnormalized(2.0, 0.0);
  CHECK_THROWS_AS(projector_probability(rho, unnormalized, polarizer_ket(0.0)), DomainError);
}

TEST_CASE("four-outcome probabilities sum to one") {
  CounterRng rng(13, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = channel_state(rng.uniform());
    const double b1 = 180.0 * rng.uniform();
    const double b2 = 180.0 * rng.uniform();
    const double total = projector_probability(rho, {b1, b2}) +
                         projector_probability(rho, {b1, b2 + 90.0}) +
                         projector_probability(rho, {b1 + 90.0, b2}) +
                         projector_probability(rho, {b1 + 90.0, b2 + 90.0});
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("visibility from state") {
  CHECK(visibility_from_state(channel_state(1.0)) == Catch::Approx(1.0));
  CHECK(visibility_from_state(channel_state(0.120)) == Catch::Approx(0.120));
  CHECK(visibility_from_state(maximally_mixed()) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("correlation closed form for channel states") {
  CounterRng rng(17, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const double eps = rng.uniform();
    const auto rho = channel_state(eps);
    const double b1 = 180.0 * rng.uniform();
    const double b2 = 180.0 * rng.uniform();
    const double r1 = b1 * kPi / 180.0, r2 = b2 * kPi / 180.0;
    const double expected =
        std::cos(2.0 * r1) * std::cos(2.0 * r2) + eps * std::sin(2.0 * r1) * std::sin(2.0 * r2);
    CHECK(correlation(rho, {b1, b2}) == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("chsh at the canonical settings") {
  const auto settings = canonical_chsh_settings();
  CHECK(chsh(channel_state(1.0), settings) == Catch::Approx(2.0 * kSqrt2).margin(1e-12));
  CHECK(chsh(channel_state(0.0), settings) == Catch::Approx(kSqrt2).margin(1e-12));
  for (const double eps : {0.3, 0.696}) {
    CHECK(chsh(channel_state(eps), settings) ==
          Catch::Approx(kSqrt2 * (1.0 + eps)).margin(1e-12));
  }
}

TEST_CASE("chsh_max closed form and oracle agreement") {
  for (const double eps : {0.0, 0.3, 0.696, 1.0}) {
    const auto rho = channel_state(eps);
    const double expected = 2.0 * std::sqrt(1.0 + eps * eps);
    CHECK(chsh_max(rho) == Catch::Approx(expected).margin(1e-12));
    CHECK(chsh_max(rho) == Catch::Approx(chsh_max_oracle(rho)).margin(1e-4));
  }
  CHECK(chsh_max(maximally_mixed()) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("chsh never exceeds chsh_max") {
  CounterRng rng(19, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = channel_state(rng.uniform());
    const ChshSettings s{180.0 * rng.uniform(), 180.0 * rng.uniform(),
                         180.0 * rng.uniform(), 180.0 * rng.uniform()};
    CHECK(chsh(rho, s) <= chsh_max(rho) + 1e-9);
  }
}

TEST_CASE("fidelity") {
  const auto bell = channel_state(1.0);
  const auto mixed_cs = channel_state(0.0);
  CHECK(fidelity(bell, bell) == Catch::Approx(1.0).margin(1e-10));
  CHECK(fidelity(mixed_cs, mixed_cs) == Catch::Approx(1.0).margin(1e-10));
  CHECK(fidelity(bell, mixed_cs) == Catch::Approx(1.0 / kSqrt2).margin(1e-10));
  CHECK(fidelity(mixed_cs, bell) == Catch::Approx(1.0 / kSqrt2).margin(1e-10));

  Matrix4c vv = Matrix4c::Zero();
  vv(3, 3) = 1.0;
  CHECK(fidelity(pure_hh(), DensityMatrix4(vv)) == Catch::Approx(0.0).margin(1e-10));
  CHECK(fidelity(pure_hh(), maximally_mixed()) == Catch::Approx(0.5).margin(1e-10));
}

TEST_CASE("density matrix JSON round trip") {
  const auto rho = channel_state(Complex(0.4, 0.35));
  const auto j = density_matrix_to_json(rho);
  CHECK(j.at("basis") == "HH,HV,VH,VV");
  const auto back = density_matrix_from_json(j);
  CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-15);

  nlohmann::json bad = j;
  bad["basis"] = "VV,VH,HV,HH";
  CHECK_THROWS_AS(density_matrix_from_json(bad), ConfigError);
}
