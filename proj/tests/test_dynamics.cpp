#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "support.hpp"

using namespace fwmkv;
using fwmkv::testing::random_cloud;

namespace {

CoefficientFamily transport(int d, double sigma, std::optional<FourierTable> cost = {}) {
  FourierFamilySpec s;
  s.dim = d;
  s.control_gain = 1.0;
  s.sigma = sigma;
  s.cost = std::move(cost);
  return fourier_family(s);
}

SimulationConfig config(std::size_t n, double dt, double T, std::uint64_t seed = 1, int stride = 1) {
  SimulationConfig c;
  c.particles = n;
  c.dt = dt;
  c.horizon = T;
  c.seed = seed;
  c.record_stride = stride;
  return c;
}

}  // namespace

TEST_CASE("simulation config validation") {
  CHECK_THROWS(config(1, 0.1, 1.0).validate());
  CHECK_THROWS(config(10, 0.0, 1.0).validate());
  CHECK_THROWS(config(10, 0.3, 1.0).validate());
  CHECK_THROWS(config(10, 2.0, 1.0).validate());
  CHECK_NOTHROW(config(10, 0.1, 1.0).validate());
  CHECK(config(10, 0.1, 1.0).steps() == 10);
}

TEST_CASE("control signals") {
  CHECK_THROWS(ControlSignal({0.0, 0.5, 0.4}, {FeedbackMap::constant(0.0), FeedbackMap::constant(1.0)}));
  CHECK_THROWS(ControlSignal({0.0, 1.0}, {}));
  const ControlDictionary dict = ControlDictionary::constants({-1.0, 0.0, 1.0});
  const ControlSignal s = ControlSignal::uniform(0.0, 1.0, dict, {2, 0});
  CHECK(s.at(0.1).constant_value()[0] == 1.0);
  CHECK(s.at(0.5).constant_value()[0] == -1.0);
  CHECK(s.at(0.99).constant_value()[0] == -1.0);
  CHECK_THROWS(ControlSignal::uniform(0.0, 1.0, dict, {3}));
}

TEST_CASE("frozen dynamics keep the initial law") {
  for (int d = 1; d <= 3; ++d) {
    const TorusMeasure mu = random_cloud(d, 16, 40u + static_cast<unsigned>(d), true);
    const CoefficientFamily fam = fourier_family(FourierFamilySpec{.dim = d});
    const FlowTrajectory t = simulate_flow(mu, ControlSignal::constant(0, 1, FeedbackMap::constant(Control{}, d)), fam,
                                           config(16, 0.1, 1.0));
    REQUIRE(t.laws.size() == 11u);
    for (const ParticleCloud& law : t.laws) {
      CHECK(std::equal(law.coords().begin(), law.coords().end(), mu.nodes().coords.begin()));
    }
  }
}

TEST_CASE("pure transport is exact") {
  for (int d = 1; d <= 3; ++d) {
    const std::vector<double> x0(static_cast<std::size_t>(d), 0.0);
    const Control a{0.7, -0.3, 1.9};
    const FlowTrajectory t = simulate_flow(TorusMeasure::dirac(x0), ControlSignal::constant(0, 1, FeedbackMap::constant(a, d)),
                                           transport(d, 0.0), config(4, 0.05, 1.0));
    for (std::size_t j = 0; j < t.laws.size(); ++j) {
      for (std::size_t i = 0; i < 4; ++i) {
        for (int r = 0; r < d; ++r) {
          const double expect = wrap_angle(a[static_cast<std::size_t>(r)] * t.times[j]);
          CHECK(circle_distance(t.laws[j].coords()[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(r)], expect) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("Brownian motion keeps the uniform law") {
  const std::size_t n = 2000;
  const TorusMeasure u = TorusMeasure::uniform(1, 128);
  const double f0 = std::abs(fourier_coefficient(u, {1, 0, 0}));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FlowTrajectory t = simulate_flow(u, ControlSignal::constant(0, 0.5, FeedbackMap::constant(0.0)), transport(1, 1.0),
                                           config(n, 0.05, 0.5, seed, 0));
    const double f1 = std::abs(fourier_coefficient(TorusMeasure(t.final_law()), {1, 0, 0}));
    CHECK(f1 <= 4.0 / std::sqrt(kTwoPi * static_cast<double>(n)) + std::exp(-0.25) * f0);
  }
}

TEST_CASE("payoff quadrature") {
  const TorusMeasure mu = random_cloud(1, 8, 3, true);
  const ControlSignal sig = ControlSignal::constant(0, 0.5, FeedbackMap::constant(0.4));
  CHECK(payoff(simulate_flow(mu, sig, transport(1, 0.3), config(8, 0.05, 0.5)), transport(1, 0.3)) == 0.0);
  const FourierTable one = trig_table(1, {{TrigTerm::Kind::constant, {0, 0, 0}, 1.0}});
  const CoefficientFamily unit = transport(1, 0.3, one);
  CHECK(payoff(simulate_flow(mu, sig, unit, config(8, 0.05, 0.5)), unit) == 0.5);

  // Eikonal, sigma 0: hand quadrature of the left-endpoint rule
  const auto L = PeriodicFunction1D::sample([](double y) { return 1.0 + std::cos(y); });
  const CoefficientFamily eik = eikonal_family(L, 0.0);
  const double a = 0.8;
  const double dt = 0.01;
  const FlowTrajectory t = simulate_flow(TorusMeasure::dirac1(0.0), ControlSignal::constant(0, 1, FeedbackMap::constant(a)), eik,
                                         config(10, dt, 1.0, 1, 0));
  double hand = 0.0;
  double y = 0.0;
  for (int j = 0; j < 100; ++j) {
    hand += (0.5 * a * a + L(wrap_centered(y))) * dt;
    y = wrap_angle(y + a * dt);
  }
  CHECK(payoff(t, eik) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("non-finite coefficients abort with the step index") {
  CoefficientFamily bad = transport(1, 0.0);
  bad.drift = [](const double* x, Features, const Control&) {
    return Vec{x[0] > 0.55 ? std::nan("") : 1.0, 0.0, 0.0};
  };
  bad.spatially_constant = false;
  try {
    simulate_flow(TorusMeasure::dirac1(0.0), ControlSignal::constant(0, 1, FeedbackMap::constant(0.0)), bad, config(4, 0.1, 1.0));
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    INFO(e.what());
    CHECK(std::string(e.what()).find("step 6") != std::string::npos);
  }
}

TEST_CASE("determinism across runs and thread counts") {
  const TorusMeasure mu = random_cloud(2, 10, 8);
  const CoefficientFamily fam = kuramoto_family(1.0, 0.7);
  const TorusMeasure mu1 = random_cloud(1, 10, 8);
  const ControlSignal sig = ControlSignal::constant(0, 1, FeedbackMap::constant(0.3));
  const SimulationConfig c = config(3000, 0.05, 1.0, 99, 0);
  setenv("MKV_THREADS", "1", 1);
  const FlowTrajectory a = simulate_flow(mu1, sig, fam, c);
  setenv("MKV_THREADS", "4", 1);
  const FlowTrajectory b = simulate_flow(mu1, sig, fam, c);
  const FlowTrajectory b2 = simulate_flow(mu1, sig, fam, c);
  unsetenv("MKV_THREADS");
  CHECK(std::equal(a.final_law().coords().begin(), a.final_law().coords().end(), b.final_law().coords().begin()));
  CHECK(std::equal(b.final_law().coords().begin(), b.final_law().coords().end(), b2.final_law().coords().begin()));
  CHECK(payoff(a, fam) == payoff(b, fam));
  // the stored law is the empirical measure of the particles, weights exactly 1/N
  for (double w : a.final_law().weights()) CHECK(w == 1.0 / 3000.0);
  (void)mu;
}

TEST_CASE("law invariance") {
  const CoefficientFamily fam = kuramoto_family(1.0, 0.5);
  const ControlSignal sig = ControlSignal::constant(0, 0.5, FeedbackMap::constant(0.2));
  const double x = 1.0;
  const LawInvarianceReport dirac = law_invariance_probe(TorusMeasure::dirac1(x), sig, eikonal_family(PeriodicFunction1D::constant(1.0), 0.0),
                                                         config(100, 0.05, 0.5), 3, {50, 100});
  CHECK(dirac.zero_spread);
  const LawInvarianceReport r = law_invariance_probe(GridDensity::from_function({64}, [](const double* p) { return 1.0 + 0.8 * std::cos(p[0]); }),
                                                     sig, fam, config(100, 0.05, 0.5), 24, {250, 1000, 4000});
  CHECK(r.exponent >= -0.7);
  CHECK(r.exponent <= -0.3);
  CHECK(r.law_spread[2] < r.law_spread[0]);
  CHECK_THROWS(law_invariance_probe(TorusMeasure::dirac1(x), sig, fam, config(100, 0.05, 0.5), 1, {10}));
}

TEST_CASE("Ito residual trivial cases") {
  const TorusMeasure mu = random_cloud(1, 50, 4, true);
  const CoefficientFamily frozen = fourier_family(FourierFamilySpec{});
  const FlowTrajectory t = simulate_flow(mu, ControlSignal::constant(0, 1, FeedbackMap::constant(0.0)), frozen, config(50, 0.1, 1.0));
  TestFunction constant;
  constant.value = [](double, const TorusMeasure&) { return 3.0; };
  constant.time_derivative = [](double, const TorusMeasure&) { return 0.0; };
  constant.measure_derivative = [](double, const TorusMeasure&) { return FourierTable(1, 2); };
  CHECK(ito_flow_residual(constant, t, frozen).residual() == 0.0);
  FourierTable f(1, 2);
  f.at({1, 0, 0}) = 1.0;
  f.at({-1, 0, 0}) = 1.0;
  CHECK(std::abs(ito_flow_residual(moment_test_function(f), t, frozen).residual()) <= 1e-12);

  const FlowTrajectory sparse = simulate_flow(mu, ControlSignal::constant(0, 1, FeedbackMap::constant(0.0)), frozen, config(50, 0.1, 1.0, 1, 0));
  CHECK_THROWS(ito_flow_residual(constant, sparse, frozen));
}

TEST_CASE("Ito residual of a moment under drift and noise") {
  // psi = mu(cos): d/dt mu(cos) = mu(-a sin - s cos) with s the diffusion factor
  const CoefficientFamily fam = transport(1, 1.0);
  FourierTable f(1, 2);
  f.at({1, 0, 0}) = 0.5 / basis_scale(1);
  f.at({-1, 0, 0}) = 0.5 / basis_scale(1);
  double coarse = 0.0;
  double fine = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const TorusMeasure mu = TorusMeasure::dirac1(0.3);
    const ControlSignal sig = ControlSignal::constant(0, 1, FeedbackMap::constant(0.6));
    coarse += ito_flow_residual(moment_test_function(f), simulate_flow(mu, sig, fam, config(4000, 0.04, 1.0, seed)), fam).corrected();
    fine += ito_flow_residual(moment_test_function(f), simulate_flow(mu, sig, fam, config(4000, 0.02, 1.0, seed)), fam).corrected();
  }
  CHECK(std::abs(coarse) < 0.05 * 8);
  CHECK(std::abs(fine) < std::abs(coarse));
}

TEST_CASE("flow Lipschitz probe") {
  const auto L = PeriodicFunction1D::sample([](double y) { return 1.0 + std::cos(y); });
  const CoefficientFamily fam = eikonal_family(L, 1.0);
  std::vector<std::pair<TorusMeasure, TorusMeasure>> pairs;
  pairs.emplace_back(TorusMeasure::dirac1(0.0), TorusMeasure::dirac1(0.0));
  for (std::uint64_t s = 0; s < 4; ++s) {
    const ParticleCloud a = random_cloud(1, 200, 10 + s, true);
    std::vector<double> moved(a.coords().begin(), a.coords().end());
    for (double& x : moved) x += 0.2 * std::sin(x + static_cast<double>(s));
    pairs.emplace_back(TorusMeasure(a), TorusMeasure(ParticleCloud::equal_weights(1, moved)));
  }
  const FlowLipschitzReport r = flow_lipschitz_probe(pairs, ControlSignal::constant(0, 0.5, FeedbackMap::constant(0.5)), fam,
                                                     config(200, 0.01, 0.5, 3, 0), 3.0, 32);
  CHECK(r.skipped == 1);
  CHECK(r.ratios.size() == 4u);
  CHECK(r.c_hat > 0.0);
  CHECK(r.c_hat < 5.0);
}

TEST_CASE("trajectory directory") {
  const auto dir = std::filesystem::temp_directory_path() / "fwmkv_traj_test";
  std::filesystem::remove_all(dir);
  const CoefficientFamily fam = transport(1, 0.5);
  const FlowTrajectory t = simulate_flow(TorusMeasure::dirac1(1.0), ControlSignal::constant(0, 0.2, FeedbackMap::constant(0.0)), fam,
                                         config(5, 0.1, 0.2));
  write_trajectory(dir, t, fam);
  CHECK(std::filesystem::exists(dir / "meta.txt"));
  CHECK(std::filesystem::exists(dir / "laws_2.txt"));
  CHECK(std::filesystem::exists(dir / "payoff.csv"));
  const TorusMeasure back = read_measure(dir / "laws_2.txt");
  CHECK(std::equal(back.nodes().coords.begin(), back.nodes().coords.end(), t.laws[2].coords().begin()));
  const KvConfig meta = KvConfig::load(dir / "meta.txt");
  CHECK(meta.get_int("", "particles") == 5);
  std::filesystem::remove_all(dir);
}
