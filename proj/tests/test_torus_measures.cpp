#include <sstream>

#include "doctest.h"
#include "support.hpp"

using namespace fwmkv;
using fwmkv::testing::random_cloud;

TEST_CASE("reduce_to_torus wraps into [0, 2pi)") {
  const double a[] = {0.0};
  CHECK(reduce_to_torus(a)[0] == 0.0);
  const double b[] = {kTwoPi};
  CHECK(reduce_to_torus(b)[0] == 0.0);
  const double c[] = {-kPi / 2};
  CHECK(reduce_to_torus(c)[0] == doctest::Approx(1.5 * kPi).epsilon(1e-15));
  const double big[] = {1e6, -37.5, 13.0};
  const TorusPoint p = reduce_to_torus(big);
  for (int i = 0; i < 3; ++i) {
    CHECK(p[i] >= 0.0);
    CHECK(p[i] < kTwoPi);
    CHECK(std::remainder(p[i] - big[i], kTwoPi) == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  }
  const TorusPoint q = reduce_to_torus(p.coords());
  for (int i = 0; i < 3; ++i) CHECK(q[i] == p[i]);
  const double bad[] = {std::nan("")};
  CHECK_THROWS_AS(reduce_to_torus(bad), std::domain_error);
  const double inf[] = {INFINITY};
  CHECK_THROWS(reduce_to_torus(inf));
}

TEST_CASE("wrap_angle agrees with fmod on and off the fast path") {
  for (double x : {-20.0, -7.0, -6.3, -1e-300, 0.0, 1.0, 6.28, 6.3, 12.5, 12.6, 1e4}) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    CHECK(wrap_angle(x) == doctest::Approx(r).epsilon(1e-14));
    CHECK(wrap_angle(x) < kTwoPi);
    CHECK(wrap_angle(x) >= 0.0);
  }
}

TEST_CASE("measure validation") {
  CHECK_THROWS(ParticleCloud(1, {0.0, 1.0}, {0.5, 0.4}));
  CHECK_THROWS(ParticleCloud(1, {0.0, 1.0}, {1.5, -0.5}));
  CHECK_THROWS(ParticleCloud(1, {0.0, 1.0}, {1.0}));
  CHECK_THROWS(ParticleCloud(4, {0, 0, 0, 0}, {1.0}));
  CHECK_THROWS(GridDensity({4}, {1.0, 1.0, -1.0, 1.0}));
  CHECK_NOTHROW(ParticleCloud(1, {0.0, 1.0}, {0.5, 0.5 + 1e-13}));
}

TEST_CASE("fourier_coefficient examples") {
  const double s = basis_scale(1);
  CHECK(s == doctest::Approx(0.3989422804014327));
  const TorusMeasure d0 = TorusMeasure::dirac1(0.0);
  for (int k : {-3, 0, 1, 7}) {
    const cplx f = fourier_coefficient(d0, {k, 0, 0});
    CHECK(f.real() == doctest::Approx(s).epsilon(1e-15));
    CHECK(std::abs(f.imag()) < 1e-15);
  }
  const TorusMeasure u = TorusMeasure::uniform(1, 64);
  CHECK(std::abs(fourier_coefficient(u, {1, 0, 0})) < 1e-15);
  const TorusMeasure half = ParticleCloud(1, {0.0, kPi}, {0.5, 0.5});
  CHECK(std::abs(fourier_coefficient(half, {1, 0, 0})) < 1e-15);
  CHECK(std::abs(fourier_coefficient(half, {2, 0, 0}) - cplx(s, 0.0)) < 1e-15);
}

TEST_CASE("fourier_table structure") {
  const FourierTable t = fourier_table(TorusMeasure::uniform(1, 32), 2);
  CHECK(t.size() == 5u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const WaveVector k = t.wave_vector(i);
    if (k[0] == 0)
      CHECK(std::abs(t[i] - cplx(basis_scale(1), 0)) < 1e-15);
    else
      CHECK(std::abs(t[i]) < 1e-15);
  }
  CHECK_THROWS(fourier_table(TorusMeasure::uniform(1, 8), 0));

  const double x[] = {1.234, 5.0};
  const FourierTable dx = fourier_table(TorusMeasure::dirac(x), 5);
  for (std::size_t i = 0; i < dx.size(); ++i) CHECK(std::abs(dx[i]) == doctest::Approx(basis_scale(2)).epsilon(1e-14));

  for (int d = 1; d <= 3; ++d) {
    const ParticleCloud c = random_cloud(d, 5, 11u + static_cast<unsigned>(d));
    const TorusMeasure mu(c);
    const int K = d == 3 ? 3 : 8;
    const FourierTable tab = fourier_table(mu, K);
    CHECK(tab.conjugate_asymmetry() == 0.0);
    for (std::size_t i = 0; i < tab.size(); ++i) {
      CHECK(std::abs(tab[i] - fourier_coefficient(mu, tab.wave_vector(i))) < 1e-14);
      CHECK(std::abs(tab[i]) <= basis_scale(d) + 1e-12);
    }
  }
}

TEST_CASE("grid quadrature converges at second order") {
  // triangle-wave density: C^0 with kinks, so the midpoint rule is exactly O(h^2)
  const auto tri = [](const double* x) { return 1.0 + 0.5 * std::abs(x[0] - kPi) / kPi; };
  std::vector<double> err;
  std::vector<double> h;
  cplx prev;
  for (int n : {16, 32, 64, 128, 256}) {
    const TorusMeasure g = GridDensity::from_function({n}, tri);
    const cplx f = fourier_coefficient(g, {1, 0, 0});
    if (n > 16) {
      err.push_back(std::abs(f - prev));
      h.push_back(kTwoPi / n);
    }
    prev = f;
  }
  CHECK(fwmkv::testing::slope(h, err) >= 1.8);
}

TEST_CASE("sample_measure") {
  const ParticleCloud s = sample_measure(TorusMeasure::dirac1(0.0), 3, 1);
  REQUIRE(s.size() == 3u);
  for (double c : s.coords()) CHECK(c == 0.0);

  const TorusMeasure mu = GridDensity::from_function({32}, [](const double* x) { return 1.0 + std::cos(x[0]); });
  const ParticleCloud a = sample_measure(mu, 100, 42);
  const ParticleCloud b = sample_measure(mu, 100, 42);
  CHECK(std::equal(a.coords().begin(), a.coords().end(), b.coords().begin()));
  const ParticleCloud c = sample_measure(mu, 100, 43);
  CHECK_FALSE(std::equal(a.coords().begin(), a.coords().end(), c.coords().begin()));

  // CLT oracle: |F_1| of n uniform draws is at most 4 / sqrt(2 pi n) with >= 99% frequency
  const std::size_t n = 10000;
  int inside = 0;
  const TorusMeasure u = TorusMeasure::uniform(1, 64);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const cplx f = fourier_coefficient(TorusMeasure(sample_measure(u, n, seed)), {1, 0, 0});
    if (std::abs(f) <= 4.0 / std::sqrt(kTwoPi * static_cast<double>(n))) ++inside;
  }
  CHECK(inside >= 99);

  // weighted resampling of a cloud follows the weights
  const TorusMeasure two = ParticleCloud(1, {1.0, 2.0}, {0.8, 0.2});
  const ParticleCloud r = sample_measure(two, 20000, 5);
  const double frac = static_cast<double>(std::count(r.coords().begin(), r.coords().end(), 1.0)) / 20000.0;
  CHECK(frac == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("mixture and integrate") {
  const TorusMeasure a = TorusMeasure::dirac1(0.0);
  const TorusMeasure b = TorusMeasure::dirac1(kPi);
  const TorusMeasure m = mixture(a, b, 0.25);
  CHECK(integrate(m, [](const double* x) { return std::cos(x[0]); }) == doctest::Approx(0.5));
  CHECK_THROWS(mixture(a, b, 1.5));
}

TEST_CASE("Philox4x32-10 known answer") {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
  const auto ff = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ff[0] == 0x408f276du);
  CHECK(ff[1] == 0x41c83b0eu);
  CHECK(ff[2] == 0xa20bc7c6u);
  CHECK(ff[3] == 0x6d5451fdu);
}

TEST_CASE("measure file round trip") {
  const TorusMeasure c = random_cloud(2, 7, 3);
  std::stringstream ss;
  write_measure(ss, c);
  CHECK(ss.str().rfind("torus-measure v1 d=2 kind=particles", 0) == 0);
  const TorusMeasure back = read_measure(ss);
  REQUIRE(back.kind() == MeasureKind::particles);
  const auto x = c.nodes();
  const auto y = back.nodes();
  CHECK(std::equal(x.coords.begin(), x.coords.end(), y.coords.begin()));
  CHECK(std::equal(x.weights.begin(), x.weights.end(), y.weights.begin()));

  const TorusMeasure g = GridDensity::from_function({4, 6}, [](const double* p) { return 2.0 + std::sin(p[0] + p[1]); });
  std::stringstream gs;
  write_measure(gs, g);
  const TorusMeasure gb = read_measure(gs);
  REQUIRE(gb.kind() == MeasureKind::grid);
  CHECK(std::equal(g.grid().density().begin(), g.grid().density().end(), gb.grid().density().begin()));

  std::stringstream bad("torus-measure v2 d=1 kind=particles\n0 1\n");
  CHECK_THROWS(read_measure(bad));
  std::stringstream bad2("torus-measure v1 d=1 kind=particles\n0 abc\n");
  CHECK_THROWS(read_measure(bad2));
}

TEST_CASE("key-value config") {
  const KvConfig c = KvConfig::parse("# comment\n[run]\nseed = 7\nname = demo\n[metric]\nlambda=3\n");
  CHECK(c.get_int("run", "seed") == 7);
  CHECK(c.get("run", "name") == "demo");
  CHECK(c.get_double("metric", "lambda") == 3.0);
  CHECK(c.get_double("metric", "cutoff", 64.0) == 64.0);
  CHECK_THROWS(c.get("metric", "cutoff"));
  CHECK(KvConfig::parse(c.dump()) == c);
  CHECK_THROWS(KvConfig::parse("[a]\nx=1\nx=2\n"));
  CHECK_THROWS(KvConfig::parse("[a]\nnovalue\n"));
  CHECK_THROWS(c.get_int("run", "name"));
}
