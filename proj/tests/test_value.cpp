#include "doctest.h"
#include "support.hpp"

using namespace fwmkv;

namespace {

PeriodicFunction1D one_plus_cos() {
  return PeriodicFunction1D::sample([](double y) { return 1.0 + std::cos(y); });
}

SearchConfig search_config(std::size_t n, double dt, int depth, int reps, std::uint64_t seed = 5) {
  SearchConfig c;
  c.sim.particles = n;
  c.sim.dt = dt;
  c.sim.horizon = 1.0;
  c.sim.seed = seed;
  c.depth = depth;
  c.mc_reps = reps;
  return c;
}

CoefficientFamily constant_cost(double c) {
  FourierFamilySpec s;
  s.cost = trig_table(1, {{TrigTerm::Kind::constant, {0, 0, 0}, c}});
  return fourier_family(s);
}

}  // namespace

TEST_CASE("Eikonal trivial solutions") {
  for (double c : {0.0, 0.7}) {
    const EikonalProblem p{PeriodicFunction1D::constant(c), 40, 32};
    const ValueTable w = eikonal_solve(p);
    const ValueTable o = eikonal_oracle_table(p, 1);
    for (int i = 0; i <= w.time_cells(); ++i)
      for (int j = 0; j < w.space_cells(); ++j) CHECK(w(i, j) == doctest::Approx(c * (1.0 - w.time(i))).epsilon(1e-12).scale(1.0));
    for (int i = 0; i <= o.time_cells(); ++i)
      for (int j = 0; j < o.space_cells(); ++j) CHECK(o(i, j) == doctest::Approx(c * (1.0 - o.time(i))).epsilon(1e-12).scale(1.0));
    CHECK(eikonal_trajectory_oracle(p, 0.25, 1.0).value == doctest::Approx(0.75 * c).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("Eikonal sweep against the trajectory oracle") {
  const EikonalProblem p{one_plus_cos()};
  const ValueTable w = eikonal_solve(p);
  CHECK(w.scheme == "local-lax-friedrichs");
  CHECK(w.cfl <= 0.5 + 1e-12);
  CHECK(w.error_estimate > 0.0);
  CHECK(w.error_estimate < 2e-2);
  for (int j = 0; j < w.space_cells(); ++j) CHECK(w(w.time_cells(), j) == 0.0);
  // nonincreasing in t since L >= 0
  for (int i = 0; i < w.time_cells(); ++i)
    for (int j = 0; j < w.space_cells(); ++j) CHECK(w(i, j) >= w(i + 1, j) - 1e-12);

  const ValueTable o = eikonal_oracle_table(p, 2);
  double gap = 0.0;
  for (double t : {0.0, 0.25, 0.5, 0.75})
    for (int j = 0; j < 64; ++j) gap = std::max(gap, std::abs(o.at(t, -kPi + kTwoPi * j / 64) - w.at(t, -kPi + kTwoPi * j / 64)));
  CHECK(gap <= 2e-2);

  const OracleResult r = eikonal_trajectory_oracle(p, 0.0, 0.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(2e-3));
  CHECK(w.at(0.0, 0.0) == doctest::Approx(r.value).epsilon(2e-2));
}

TEST_CASE("Eikonal sweep converges under refinement") {
  const EikonalProblem coarse{one_plus_cos(), 50, 50};
  const EikonalProblem fine{one_plus_cos(), 200, 200};
  const ValueTable ref = eikonal_oracle_table(fine, 4);
  const auto gap = [&](const ValueTable& w) {
    double g = 0.0;
    for (int j = 0; j < 50; ++j) g = std::max(g, std::abs(w.at(0.0, -kPi + kTwoPi * j / 50) - ref.at(0.0, -kPi + kTwoPi * j / 50)));
    return g;
  };
  CHECK(gap(eikonal_solve(fine, false)) < gap(eikonal_solve(coarse, false)));
}

TEST_CASE("classical solution and Hamiltonian identity away from the kink") {
  const EikonalProblem p{one_plus_cos(), 400, 400};
  const ValueTable w = eikonal_solve(p, false);
  const CoefficientFamily fam = eikonal_family(p.L, 1.0);
  const double dy = kTwoPi / w.space_cells();
  const double dt = 1.0 / w.time_cells();
  for (int i : {40, 200}) {
    for (int j : {150, 200, 250}) {
      const double wy = (w(i, j + 1) - w(i, j - 1)) / (2 * dy);
      const double wt = (w(i + 1, j) - w(i - 1, j)) / (2 * dt);
      const double y = w.space(j);
      CHECK(std::abs(-wt + 0.5 * wy * wy - p.L(y)) <= 3e-2);
      // H(mu, d_mu v) with d_mu v(x) = w_y x near the mean: use the surrogate w_y sin(x - y)
      const FourierTable gamma = trig_table(1, {{TrigTerm::Kind::sine, {1, 0, 0}, wy * std::cos(y)},
                                                {TrigTerm::Kind::cosine, {1, 0, 0}, -wy * std::sin(y)}});
      HamiltonianOptions opts;
      opts.refine_levels = 40;
      const TorusMeasure mu = TorusMeasure::dirac1(y);
      const double h = hamiltonian(mu, gamma, ControlDictionary::constants(-3, 3, 13), fam, opts).value;
      // the noise term of the surrogate vanishes at the atom
      CHECK(std::abs(h - (-0.5 * wy * wy + p.L(y))) <= 3e-2);
    }
  }
}

TEST_CASE("reduced value") {
  const ValueTable w = eikonal_solve(EikonalProblem{one_plus_cos(), 100, 100});
  CHECK(reduced_value(0.3, TorusMeasure::dirac1(1.0), w).value == doctest::Approx(w.at(0.3, 1.0)));
  CHECK(reduced_value(1.0, TorusMeasure::dirac1(2.5), w).value == 0.0);
  const TorusMeasure pair = ParticleCloud(1, {-0.3, 0.5}, {0.5, 0.5});
  const ReducedValue r = reduced_value(0.2, pair, w);
  CHECK(r.mean == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(w.at(0.2, 0.1)).epsilon(1e-12));
  CHECK_FALSE(r.flagged);
  const TorusMeasure spread = ParticleCloud(1, {0.0, 2.6, -2.6}, {0.6, 0.2, 0.2});
  CHECK(reduced_value(0.2, spread, w).flagged);
  CHECK_THROWS(reduced_value(0.0, TorusMeasure::dirac(std::vector<double>{0.0, 0.0}), w));
  CHECK_THROWS(w.at(1.5, 0.0));
}

TEST_CASE("lifted mean across the cut") {
  const TorusMeasure m = ParticleCloud(1, {kPi - 0.1, -kPi + 0.3}, {0.5, 0.5});
  const LiftedMean lm = lifted_mean(m);
  CHECK(wrap_centered(lm.mean - (kPi + 0.1)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK_FALSE(lm.flagged);
}

TEST_CASE("value search trivial and monotone cases") {
  const CoefficientFamily zero = fourier_family(FourierFamilySpec{});
  const SearchResult z = value_search(0.0, TorusMeasure::dirac1(0.0), zero, ControlDictionary::constants(-1, 1, 3), search_config(8, 0.1, 2, 4));
  CHECK(z.search_value == 0.0);
  CHECK(z.upper_bound == 0.0);
  CHECK(z.leaves == 9u);

  const CoefficientFamily eik = eikonal_family(one_plus_cos(), 1.0);
  const TorusMeasure d0 = TorusMeasure::dirac1(0.4);
  const SearchConfig cfg = search_config(200, 0.05, 2, 0);
  const ControlDictionary small = ControlDictionary::constants({-1.0, 1.0});
  const ControlDictionary big = small.merged(ControlDictionary::constants(-2, 2, 5));
  CHECK(value_search(0.0, d0, eik, big, cfg).search_value <= value_search(0.0, d0, eik, small, cfg).search_value);

  SearchConfig tight = cfg;
  tight.budget = 3;
  const SearchResult partial = value_search(0.0, d0, eik, big, tight);
  CHECK(partial.partial);
  CHECK(partial.leaves == 3u);
  CHECK_THROWS(value_search(0.0, d0, eik, ControlDictionary{}, cfg));
}

TEST_CASE("value search upper-bounds the Eikonal reduced value") {
  const PeriodicFunction1D L = one_plus_cos();
  const ValueTable w = eikonal_solve(EikonalProblem{L});
  const CoefficientFamily eik = eikonal_family(L, 1.0);
  const SearchResult r = value_search(0.0, TorusMeasure::dirac1(0.0), eik, ControlDictionary::constants(-2, 2, 5), search_config(300, 0.05, 2, 8));
  const double target = reduced_value(0.0, TorusMeasure::dirac1(0.0), w).value;
  CHECK(r.upper_bound >= target - 3.0 * r.std_error - w.error_estimate - 1e-3);
  CHECK(r.upper_bound - target <= 5e-2);
  CHECK(r.best.maps().size() == 2u);
}

TEST_CASE("DPP rows") {
  SUBCASE("tau = T is exact") {
    const CoefficientFamily eik = eikonal_family(one_plus_cos(), 1.0);
    const DPPReport r = dpp_residual(0.0, 1.0, TorusMeasure::dirac1(0.2), eik, ControlDictionary::constants(-1, 1, 3), search_config(100, 0.05, 2, 4));
    CHECK(r.residual() == 0.0);
    CHECK(r.pass());
  }
  SUBCASE("frozen dynamics with unit cost") {
    const DPPReport r = dpp_residual(0.2, 0.6, TorusMeasure::dirac1(0.2), constant_cost(1.0), ControlDictionary::constants(-1, 1, 3),
                                     search_config(20, 0.05, 2, 4));
    CHECK(r.lhs == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.pass());
  }
  CHECK_THROWS(dpp_residual(0.5, 0.5, TorusMeasure::dirac1(0.2), constant_cost(1.0), ControlDictionary::constants({0.0}), search_config(20, 0.05, 1, 1)));
}

TEST_CASE("Lipschitz probes") {
  // frozen dynamics, l = cos: J(mu) - J(nu) = (T - t)(mu - nu)(cos)
  const CoefficientFamily fam = [] {
    FourierFamilySpec s;
    s.cost = trig_table(1, {{TrigTerm::Kind::cosine, {1, 0, 0}, 1.0}});
    return fourier_family(s);
  }();
  std::vector<std::pair<TorusMeasure, TorusMeasure>> pairs;
  pairs.emplace_back(TorusMeasure::dirac1(1.0), TorusMeasure::dirac1(1.0));
  for (std::uint64_t s = 0; s < 10; ++s)
    pairs.emplace_back(fwmkv::testing::random_cloud(1, 50, 70 + s, true), fwmkv::testing::random_cloud(1, 50, 80 + s, true));
  SimulationConfig c;
  c.particles = 50;
  c.dt = 0.1;
  c.horizon = 1.0;
  const SpaceLipschitzReport r = lipschitz_probe_space(fam, ControlDictionary::constants({0.0}), c, pairs);
  CHECK(r.skipped == 1);
  REQUIRE(r.ratios.size() == 10u);
  for (std::size_t i = 0; i < r.ratios.size(); ++i) {
    const auto& [mu, nu] = pairs[i + 1];
    const double cosdiff = integrate(mu, [](const double* x) { return std::cos(x[0]); }) - integrate(nu, [](const double* x) { return std::cos(x[0]); });
    CHECK(r.ratios[i] == doctest::Approx(std::abs(cosdiff) / rho_lambda(mu, nu, 3.0, 32).value).epsilon(1e-9));
  }
  CHECK(r.l1 <= embedding_constant(3, 1));

  const TimeLipschitzReport lin = lipschitz_probe_time(constant_cost(1.0), ControlDictionary::constants({0.0}), search_config(10, 0.05, 1, 2), TorusMeasure::dirac1(0.0), 0.0,
                                                       {0.4, 0.2, 0.1, 0.05});
  for (std::size_t i = 0; i < lin.gaps.size(); ++i) CHECK(lin.differences[i] == doctest::Approx(lin.gaps[i]).epsilon(1e-12));
  CHECK(lin.exponent == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lin.pass());

  const TimeLipschitzReport flat = lipschitz_probe_time(fourier_family(FourierFamilySpec{}), ControlDictionary::constants({0.0}), search_config(10, 0.05, 1, 2),
                                                        TorusMeasure::dirac1(0.0), 0.0, {0.4, 0.2, 0.1, 0.05});
  CHECK(flat.noise_floor);
  CHECK(flat.pass());
}
