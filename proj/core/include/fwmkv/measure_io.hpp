#pragma once

#include <filesystem>
#include <iosfwd>

#include "fwmkv/measure.hpp"

namespace fwmkv {

/// Plain-text measure format. Header `torus-measure v1 d=<d> kind=<particles|grid>`, then
/// `x1 ... xd w` per particle, or `shape n1 ... nd` followed by row-major density values.
/// Lines starting with '#' are comments. Values are written with 17 significant digits.
void write_measure(std::ostream& out, const TorusMeasure& mu);
void write_measure(const std::filesystem::path& path, const TorusMeasure& mu);

/// Throws std::runtime_error with the offending line number on malformed input.
TorusMeasure read_measure(std::istream& in);
TorusMeasure read_measure(const std::filesystem::path& path);

}  // namespace fwmkv
