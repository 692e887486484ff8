#include "fwmkv/measure_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwmkv {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw std::runtime_error("measure file line " + std::to_string(line) + ": " + what);
}

std::vector<double> parse_numbers(const std::string& text, std::size_t line) {
  std::istringstream is(text);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail(line, "not a number: '" + tok + "'");
    }
    if (used != tok.size()) fail(line, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_measure(std::ostream& out, const TorusMeasure& mu) {
  const int d = mu.dim();
  if (mu.kind() == MeasureKind::particles) {
    out << "torus-measure v1 d=" << d << " kind=particles\n";
    const NodesView n = mu.nodes();
    for (std::size_t i = 0; i < n.size(); ++i) {
      const double* x = n.point(i);
      for (int a = 0; a < d; ++a) out << fmt(x[a]) << ' ';
      out << fmt(n.weights[i]) << '\n';
    }
  } else {
    const GridDensity& g = mu.grid();
    out << "torus-measure v1 d=" << d << " kind=grid\nshape";
    for (int n : g.shape()) out << ' ' << n;
    out << '\n';
    for (double v : g.density()) out << fmt(v) << '\n';
  }
}

void write_measure(const std::filesystem::path& path, const TorusMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_measure(out, mu);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

TorusMeasure read_measure(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  const auto next = [&](std::string& s) {
    while (std::getline(in, s)) {
      ++lineno;
      const auto first = s.find_first_not_of(" \t\r");
      if (first == std::string::npos || s[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next(line)) throw std::runtime_error("measure file is empty");
  std::istringstream header(line);
  std::string magic, version, dtok, ktok;
  header >> magic >> version >> dtok >> ktok;
  if (magic != "torus-measure" || version != "v1") fail(lineno, "expected header 'torus-measure v1 ...'");
  if (dtok.rfind("d=", 0) != 0 || ktok.rfind("kind=", 0) != 0) fail(lineno, "header needs d=<d> kind=<kind>");
  int d = 0;
  try {
    d = std::stoi(dtok.substr(2));
  } catch (const std::exception&) {
    fail(lineno, "bad dimension '" + dtok + "'");
  }
  if (d < 1 || d > kMaxDim) fail(lineno, "dimension must be in [1, 3]");
  const std::string kind = ktok.substr(5);

  try {
    if (kind == "particles") {
      std::vector<double> coords, weights;
      while (next(line)) {
        const std::vector<double> v = parse_numbers(line, lineno);
        if (v.size() != static_cast<std::size_t>(d + 1)) fail(lineno, "expected " + std::to_string(d + 1) + " numbers");
        coords.insert(coords.end(), v.begin(), v.begin() + d);
        weights.push_back(v.back());
      }
      return ParticleCloud(d, std::move(coords), std::move(weights));
    }
    if (kind == "grid") {
      if (!next(line)) fail(lineno, "missing shape line");
      std::istringstream sl(line);
      std::string word;
      sl >> word;
      if (word != "shape") fail(lineno, "expected 'shape n1 ... nd'");
      std::vector<int> shape;
      int n = 0;
      while (sl >> n) shape.push_back(n);
      if (shape.size() != static_cast<std::size_t>(d)) fail(lineno, "shape needs d entries");
      std::vector<double> values;
      while (next(line)) {
        const std::vector<double> v = parse_numbers(line, lineno);
        values.insert(values.end(), v.begin(), v.end());
      }
      return GridDensity(std::move(shape), std::move(values));
    }
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid measure: ") + e.what());
  }
  fail(lineno, "unknown kind '" + kind + "'");
}

TorusMeasure read_measure(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure file '" + path.string() + "'");
  return read_measure(in);
}

}  // namespace fwmkv
