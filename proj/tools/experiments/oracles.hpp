#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fwmkv/fwmkv.hpp"

namespace fwmkv::tools {

/// Random cloud with n atoms, weights 0.05 + U(0,1) normalized (or equal), deterministic in seed.
inline ParticleCloud random_cloud(int dim, std::size_t n, std::uint64_t seed, bool equal = false) {
  RandomStream rng(seed);
  std::vector<double> coords(n * static_cast<std::size_t>(dim));
  for (double& c : coords) c = kTwoPi * rng.uniform();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (!equal) {
    double s = 0.0;
    for (double& v : w) s += (v = 0.05 + rng.uniform());
    for (double& v : w) v /= s;
  }
  return ParticleCloud(dim, std::move(coords), std::move(w));
}

/// Transportation LP by successive shortest paths (Bellman-Ford on the residual graph).
/// Exact at a vertex of the polytope; independent of the circular CDF construction.
inline double transport_lp(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<std::vector<double>>& cost) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> supply = a;
  std::vector<double> demand = b;
  std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
  double total = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 1000; ++iter) {
    // sources 0..n-1, sinks n..n+m-1
    std::vector<double> dist(n + m, inf);
    std::vector<long> prev(n + m, -1);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > 1e-15) dist[i] = 0.0;
    for (std::size_t round = 0; round < n + m; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          if (dist[i] < inf && dist[i] + cost[i][j] < dist[n + j] - 1e-15) {
            dist[n + j] = dist[i] + cost[i][j];
            prev[n + j] = static_cast<long>(i);
            changed = true;
          }
          if (flow[i][j] > 1e-15 && dist[n + j] < inf && dist[n + j] - cost[i][j] < dist[i] - 1e-15) {
            dist[i] = dist[n + j] - cost[i][j];
            prev[i] = static_cast<long>(n + j);
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    std::size_t sink = n + m;
    for (std::size_t j = 0; j < m; ++j)
      if (demand[j] > 1e-15 && dist[n + j] < inf && (sink == n + m || dist[n + j] < dist[sink])) sink = n + j;
    if (sink == n + m) break;
    double push = demand[sink - n];
    std::size_t v = sink;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (v < n) push = std::min(push, flow[v][u - n]);
      v = u;
    }
    push = std::min(push, supply[v]);
    const std::size_t src = v;
    v = sink;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (v >= n) {
        flow[u][v - n] += push;
        total += push * cost[u][v - n];
      } else {
        flow[v][u - n] -= push;
        total -= push * cost[v][u - n];
      }
      v = u;
    }
    supply[src] -= push;
    demand[sink - n] -= push;
  }
  return total;
}

inline double w1_lp(const ParticleCloud& mu, const ParticleCloud& nu) {
  std::vector<double> a(mu.weights().begin(), mu.weights().end());
  std::vector<double> b(nu.weights().begin(), nu.weights().end());
  std::vector<std::vector<double>> c(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i][j] = circle_distance(mu.coords()[i], nu.coords()[j]);
  return transport_lp(a, b, c);
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace fwmkv::tools
