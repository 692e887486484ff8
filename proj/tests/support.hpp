#pragma once

#include "oracles.hpp"

namespace fwmkv::testing {

using tools::random_cloud;
using tools::transport_lp;
using tools::w1_lp;

inline double slope(const std::vector<double>& x, const std::vector<double>& y) { return tools::loglog_slope(x, y); }

}  // namespace fwmkv::testing
