#include "doctest.h"
#include "support.hpp"

using namespace fwmkv;
using fwmkv::testing::random_cloud;

namespace {

FourierTable single_mode(int d, int K, const WaveVector& k, cplx c) {
  FourierTable t(d, K);
  t.at(k) = c;
  return t;
}

}  // namespace

TEST_CASE("n_star") {
  CHECK(n_star(1) == 3);
  CHECK(n_star(2) == 4);
  CHECK(n_star(3) == 4);
  CHECK_THROWS(n_star(0));
}

TEST_CASE("SobolevWeight validation") {
  CHECK_THROWS(SobolevWeight(0.5, 1));
  CHECK_NOTHROW(SobolevWeight::dual(1.0, 1));
  CHECK_THROWS(SobolevWeight::dual(1.0, 2));
  CHECK_THROWS(SobolevWeight::dual(1.5, 3));
  CHECK_THROWS(rho_lambda(TorusMeasure::uniform(2, 4), TorusMeasure::uniform(2, 4), 1.0, 8));
}

TEST_CASE("sobolev_norm examples") {
  const FourierTable c0 = single_mode(1, 4, {0, 0, 0}, 1.0);
  CHECK(sobolev_norm(c0, SobolevWeight(2, 1)).value == doctest::Approx(1.0));
  const FourierTable e1 = single_mode(1, 4, {1, 0, 0}, 1.0);
  CHECK(sobolev_norm(e1, SobolevWeight(1, 1)).value == doctest::Approx(std::sqrt(2.0)));
  FourierTable e12 = e1;
  e12.at({2, 0, 0}) = 1.0;
  CHECK(sobolev_norm(e12, SobolevWeight(1, 1)).value == doctest::Approx(std::sqrt(7.0)));
  CHECK(std::isinf(sobolev_norm(e12, SobolevWeight(1, 1)).truncation_error));
  CHECK(sobolev_norm(e12, SobolevWeight(1, 1), 0.0).truncation_error == 0.0);

  // grid form: f = (2pi)^{-1/2} has F_0 = 1
  std::vector<double> vals(16, basis_scale(1));
  const int shape[] = {16};
  CHECK(sobolev_norm(shape, vals, SobolevWeight(2, 1), 4).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lattice tail bound is an upper bound that shrinks") {
  for (int d = 1; d <= 3; ++d) {
    const double s = n_star(d);
    for (int K : {2, 4, 8}) {
      double exact = 0.0;  // brute force over a large cube
      const int R = d == 1 ? 20000 : (d == 2 ? 400 : 60);
      if (d == 1) {
        for (int k = K + 1; k <= R; ++k) exact += 2.0 * std::pow(1.0 + k * k, -s);
      } else if (d == 2) {
        for (int a = -R; a <= R; ++a)
          for (int b = -R; b <= R; ++b)
            if (std::max(std::abs(a), std::abs(b)) > K) exact += std::pow(1.0 + a * a + b * b, -s);
      } else {
        for (int a = -R; a <= R; ++a)
          for (int b = -R; b <= R; ++b)
            for (int c = -R; c <= R; ++c)
              if (std::max({std::abs(a), std::abs(b), std::abs(c)}) > K) exact += std::pow(1.0 + a * a + b * b + c * c, -s);
      }
      const double bound = lattice_tail_bound(d, s, K);
      CHECK(bound >= exact);
      CHECK(bound <= 25.0 * exact + 1e-12);
    }
  }
}

TEST_CASE("rho_lambda brute-force series oracle") {
  const TorusMeasure a = TorusMeasure::dirac1(0.0);
  const TorusMeasure b = TorusMeasure::dirac1(kPi);
  const MetricResult r = rho_lambda(a, b, 3.0, 64);
  long double sum = 0.0L;
  for (long k = 1000000; k >= 1; --k) {
    if (k % 2 == 1) sum += 2.0L * (4.0L / (2.0L * std::numbers::pi_v<long double>)) * std::pow(1.0L + k * k, -3.0L);
  }
  CHECK(std::abs(r.value - static_cast<double>(std::sqrt(sum))) < 1e-6);
  CHECK(r.cutoff == 64);
  CHECK(r.truncation_error > 0.0);
  CHECK(r.truncation_error < 1e-4);
  CHECK(rho_lambda(a, a, 3.0, 64).value == 0.0);
  CHECK(rho_lambda(b, a, 3.0, 64).value == r.value);
}

TEST_CASE("rho_lambda metric axioms on random clouds") {
  for (int d = 1; d <= 2; ++d) {
    const double lam = n_star(d);
    const int K = d == 1 ? 32 : 12;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const TorusMeasure x = random_cloud(d, 6, 100 + s);
      const TorusMeasure y = random_cloud(d, 4, 200 + s);
      const TorusMeasure z = random_cloud(d, 5, 300 + s);
      const MetricResult xy = rho_lambda(x, y, lam, K);
      const MetricResult yx = rho_lambda(y, x, lam, K);
      CHECK(xy.value == yx.value);
      const MetricResult xz = rho_lambda(x, z, lam, K);
      const MetricResult zy = rho_lambda(z, y, lam, K);
      CHECK(xy.value <= xz.value + zy.value + 2.0 * xy.truncation_error);
      CHECK(xy.value > 0.0);
      const MetricResult x2 = rho_lambda(x, y, lam, 2 * K);
      CHECK(std::abs(x2.value - xy.value) <= xy.truncation_error);
    }
  }
  // equal measures up to permutation and merged weights
  const TorusMeasure p = ParticleCloud(1, {1.0, 2.0, 1.0}, {0.25, 0.5, 0.25});
  const TorusMeasure q = ParticleCloud(1, {2.0, 1.0}, {0.5, 0.5});
  CHECK(rho_lambda(p, q, 3.0, 32).value < 1e-15);
}

TEST_CASE("dual maximizer saturates and beats competitors") {
  const double lam = 3.0;
  const TorusMeasure a = TorusMeasure::dirac1(0.0);
  const TorusMeasure b = TorusMeasure::dirac1(kPi);
  const FourierTable eta = fourier_table(a, 32) - fourier_table(b, 32);
  const DualMaximizer dm = dual_maximizer(eta, lam);
  CHECK_FALSE(dm.degenerate);
  const double norm = sobolev_norm(dm.psi, SobolevWeight(lam, 1), 0.0).value;
  const double pairing = pair_measure_function(eta, dm.psi);
  const MetricResult r = rho_lambda(a, b, lam, 32);
  CHECK(std::abs(pairing / norm - r.value) <= 1e-12 + r.truncation_error);

  const DualMaximizer zero = dual_maximizer(FourierTable(1, 8), lam);
  CHECK(zero.degenerate);
  for (std::size_t i = 0; i < zero.psi.size(); ++i) CHECK(zero.psi[i] == cplx{});

  const TorusMeasure x = random_cloud(1, 5, 9);
  const TorusMeasure y = random_cloud(1, 5, 10);
  const FourierTable e2 = fourier_table(x, 32) - fourier_table(y, 32);
  const DualMaximizer m2 = dual_maximizer(e2, lam);
  const double best = pair_measure_function(e2, m2.psi) / sobolev_norm(m2.psi, SobolevWeight(lam, 1), 0.0).value;
  RandomStream rng(77);
  for (int i = 0; i < 100; ++i) {
    FourierTable psi(1, 32);
    for (int k = 0; k <= 32; ++k) {
      const cplx c(rng.normal(), k == 0 ? 0.0 : rng.normal());
      psi.at({k, 0, 0}) = c * std::pow(1.0 + k * k, -2.0);
      psi.at({-k, 0, 0}) = std::conj(psi.at({k, 0, 0}));
    }
    psi *= 1.0 / sobolev_norm(psi, SobolevWeight(lam, 1), 0.0).value;
    CHECK(pair_measure_function(e2, psi) <= best + 1e-12);
  }
}

TEST_CASE("w1_circle") {
  const ParticleCloud a = ParticleCloud::dirac(std::vector<double>{0.5});
  const ParticleCloud b = ParticleCloud::dirac(std::vector<double>{6.0});
  CHECK(w1_circle(a, b) == doctest::Approx(kTwoPi - 5.5).epsilon(1e-14));
  CHECK(w1_circle(a, a) == 0.0);
  CHECK_THROWS(w1_circle(random_cloud(2, 2, 1), random_cloud(2, 2, 2)));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const ParticleCloud x = random_cloud(1, 1 + s % 5, 1000 + s);
    const ParticleCloud y = random_cloud(1, 1 + (s / 5) % 5, 2000 + s);
    CHECK(std::abs(w1_circle(x, y) - fwmkv::testing::w1_lp(x, y)) <= 1e-10);
  }
}

TEST_CASE("embedding constants") {
  CHECK(embedding_constant(1, 1) == doctest::Approx(std::sqrt(2.0 * (1.0 + kTwoPi))));
  CHECK(embedding_constant(1, 1) == doctest::Approx(3.81659).epsilon(1e-5));
  CHECK(embedding_constant(2, 1) == doctest::Approx(5.39749).epsilon(1e-5));
  for (int m = 1; m < 5; ++m) CHECK(embedding_constant(m + 1, 1) >= embedding_constant(m, 1));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const ParticleCloud x = random_cloud(1, 4, 3000 + s);
    const ParticleCloud y = random_cloud(1, 3, 4000 + s);
    CHECK(w1_circle(x, y) <= embedding_constant(1, 1) * rho_lambda(x, y, 1.0, 256).value + 1e-8);
  }
}

TEST_CASE("tail constant c(d)") {
  const CertifiedInterval c1 = tail_constant_c(1);
  CHECK(c1.contains(kPi / std::tanh(kPi)));
  double prev = tail_constant_c(1, 16).width();
  for (int K : {32, 64, 128}) {
    const double w = tail_constant_c(1, K).width();
    CHECK(w / prev <= 0.51);
    prev = w;
  }
  for (int d = 1; d <= 3; ++d) {
    CHECK(tail_constant_c(d).lower > 1.0);
    CHECK(tail_constant_c(d).upper >= tail_constant_c(d).lower);
  }
}
