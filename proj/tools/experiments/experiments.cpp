#include "experiments.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fwmkv::tools {
namespace {

template <class T>
T parse_number(std::string_view s, const std::string& what) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw UsageError("cannot parse " + what + " from '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

WaveVector parse_wave(std::string_view body, int dim, const std::string& token) {
  WaveVector k{0, 0, 0};
  if (!body.empty() && body.front() == '(') {
    if (body.back() != ')') throw UsageError("unbalanced parenthesis in trig term '" + token + "'");
    const auto parts = split(std::string(body.substr(1, body.size() - 2)), ',');
    if (static_cast<int>(parts.size()) != dim)
      throw UsageError("trig term '" + token + "' needs " + std::to_string(dim) + " wave numbers");
    for (int i = 0; i < dim; ++i) k[static_cast<std::size_t>(i)] = parse_number<int>(parts[static_cast<std::size_t>(i)], "wave number");
    return k;
  }
  if (dim != 1) throw UsageError("trig term '" + token + "' needs the (k1,..,kd) form in dimension " + std::to_string(dim));
  k[0] = parse_number<int>(body, "wave number");
  return k;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<TrigTerm> parse_trig_terms(const std::string& text, int dim) {
  std::vector<TrigTerm> terms;
  for (const std::string& token : words(text)) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw UsageError("trig term '" + token + "' is not of the form term=coef");
    const std::string name = token.substr(0, eq);
    TrigTerm t;
    t.coef = parse_number<double>(std::string_view(token).substr(eq + 1), "coefficient");
    if (name == "const") {
      t.kind = TrigTerm::Kind::constant;
    } else if (name.rfind("cos", 0) == 0 || name.rfind("sin", 0) == 0) {
      t.kind = name[0] == 'c' ? TrigTerm::Kind::cosine : TrigTerm::Kind::sine;
      t.k = parse_wave(std::string_view(name).substr(3), dim, token);
    } else {
      throw UsageError("unknown trig term '" + name + "'");
    }
    terms.push_back(t);
  }
  return terms;
}

TorusMeasure load_measure_spec(const std::string& spec, int dim) {
  if (spec.rfind("dirac:", 0) == 0) {
    const auto parts = split(spec.substr(6), ',');
    if (static_cast<int>(parts.size()) != dim)
      throw UsageError("'" + spec + "' needs " + std::to_string(dim) + " coordinates");
    std::vector<double> x;
    for (const auto& p : parts) x.push_back(parse_number<double>(p, "coordinate"));
    return TorusMeasure::dirac(x);
  }
  if (spec == "uniform") return TorusMeasure::uniform(dim);
  if (spec.rfind("uniform:", 0) == 0) return TorusMeasure::uniform(dim, parse_number<int>(spec.substr(8), "cell count"));
  if (!std::filesystem::exists(spec)) throw UsageError("measure file '" + spec + "' does not exist");
  TorusMeasure mu = [&] {
    try {
      return read_measure(std::filesystem::path(spec));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }();
  if (mu.dim() != dim)
    throw UsageError("measure '" + spec + "' has dimension " + std::to_string(mu.dim()) + ", expected " + std::to_string(dim));
  return mu;
}

PeriodicFunction1D eikonal_running_cost(const std::string& L) {
  const SeriesEvaluator ev(trig_table(1, parse_trig_terms(L, 1)));
  return PeriodicFunction1D::sample([&](double y) { return ev.value(&y); });
}

CoefficientFamily make_family(const FamilySpec& spec) {
  if (spec.name == "eikonal") return eikonal_family(eikonal_running_cost(spec.L), spec.sigma);
  if (spec.name == "kuramoto") return kuramoto_family(spec.kappa, spec.sigma);
  if (spec.name != "fourier") throw UsageError("unknown family '" + spec.name + "' (eikonal, kuramoto, fourier)");
  if (spec.dim < 1 || spec.dim > kMaxDim) throw UsageError("family dim must be in 1.." + std::to_string(kMaxDim));
  FourierFamilySpec s;
  s.dim = spec.dim;
  s.control_gain = spec.gain;
  if (!spec.drift.empty()) {
    if (static_cast<int>(spec.drift.size()) != spec.dim) throw UsageError("fourier family needs one drift table per axis");
    for (const auto& d : spec.drift) s.drift.push_back(trig_table(spec.dim, parse_trig_terms(d, spec.dim)));
  }
  s.sigma = spec.sigma;
  s.cost_control = spec.cost_control;
  if (!spec.cost.empty()) s.cost = trig_table(spec.dim, parse_trig_terms(spec.cost, spec.dim));
  if (!spec.moment.empty()) s.moment = trig_table(spec.dim, parse_trig_terms(spec.moment, spec.dim));
  s.moment_drift = spec.moment_drift;
  s.moment_cost = spec.moment_cost;
  s.terminal = spec.terminal;
  return fourier_family(s);
}

ControlDictionary DictionarySpec::build() const {
  if (!values.empty()) return ControlDictionary::constants(values);
  if (count < 1) throw UsageError("dictionary count must be positive");
  if (count == 1) return ControlDictionary::constants({lo});
  return ControlDictionary::constants(lo, hi, count);
}

SearchConfig ExperimentConfig::search() const {
  SearchConfig c;
  c.sim = sim;
  c.depth = depth;
  c.mc_reps = mc_reps;
  c.budget = budget;
  return c;
}

namespace {

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + format_double(x);
  return s;
}

#define FWMKV_DOUBLE(member) \
  Field{[](const ExperimentConfig& c) { return format_double(c.member); }, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<double>(v, #member); }}
#define FWMKV_INT(member, type) \
  Field{[](const ExperimentConfig& c) { return std::to_string(c.member); }, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<type>(v, #member); }}
#define FWMKV_STRING(member) \
  Field{[](const ExperimentConfig& c) { return std::string(c.member); }, [](ExperimentConfig& c, const std::string& v) { c.member = v; }}

const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>> s = {
      {"experiment",
       {{"id", FWMKV_STRING(id)},
        {"seed", FWMKV_INT(sim.seed, std::uint64_t)},
        {"output", Field{[](const ExperimentConfig& c) { return c.output.string(); },
                         [](ExperimentConfig& c, const std::string& v) { c.output = v; }}},
        {"init", FWMKV_STRING(init)}}},
      {"family",
       {{"name", FWMKV_STRING(family.name)},
        {"sigma", FWMKV_DOUBLE(family.sigma)},
        {"L", FWMKV_STRING(family.L)},
        {"kappa", FWMKV_DOUBLE(family.kappa)},
        {"dim", FWMKV_INT(family.dim, int)},
        {"gain", FWMKV_DOUBLE(family.gain)},
        {"cost_control", FWMKV_DOUBLE(family.cost_control)},
        {"cost", FWMKV_STRING(family.cost)},
        {"moment", FWMKV_STRING(family.moment)},
        {"moment_drift", FWMKV_DOUBLE(family.moment_drift)},
        {"moment_cost", FWMKV_DOUBLE(family.moment_cost)},
        {"terminal", FWMKV_DOUBLE(family.terminal)}}},
      {"dictionary",
       {{"lo", FWMKV_DOUBLE(dictionary.lo)},
        {"hi", FWMKV_DOUBLE(dictionary.hi)},
        {"count", FWMKV_INT(dictionary.count, int)},
        {"values", Field{[](const ExperimentConfig& c) { return join_doubles(c.dictionary.values); },
                         [](ExperimentConfig& c, const std::string& v) {
                           c.dictionary.values.clear();
                           for (const auto& w : words(v)) c.dictionary.values.push_back(parse_number<double>(w, "dictionary value"));
                         }}}}},
      {"simulation",
       {{"particles", FWMKV_INT(sim.particles, std::size_t)},
        {"dt", FWMKV_DOUBLE(sim.dt)},
        {"t0", FWMKV_DOUBLE(sim.t0)},
        {"horizon", FWMKV_DOUBLE(sim.horizon)},
        {"record_stride", FWMKV_INT(sim.record_stride, int)}}},
      {"search",
       {{"depth", FWMKV_INT(depth, int)}, {"mc_reps", FWMKV_INT(mc_reps, int)}, {"budget", FWMKV_INT(budget, std::size_t)}}},
      {"metric", {{"lambda", FWMKV_DOUBLE(lambda)}, {"cutoff", FWMKV_INT(cutoff, int)}}},
  };
  return s;
}

#undef FWMKV_DOUBLE
#undef FWMKV_INT
#undef FWMKV_STRING

}  // namespace

KvConfig ExperimentConfig::to_kv() const {
  KvConfig kv;
  for (const auto& [section, fields] : schema()) {
    for (const auto& [key, f] : fields) kv.set(section, key, f.get(*this));
    if (section == "family")
      for (std::size_t i = 0; i < family.drift.size(); ++i) kv.set(section, "drift_" + std::to_string(i + 1), family.drift[i]);
  }
  return kv;
}

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
  ExperimentConfig c;
  for (const std::string& section : kv.sections()) {
    const auto sit = std::find_if(schema().begin(), schema().end(), [&](const auto& s) { return s.first == section; });
    if (sit == schema().end()) throw UsageError("config: unknown section [" + section + "]");
    for (const std::string& key : kv.keys(section)) {
      const std::string value = kv.get(section, key);
      if (section == "family" && key.rfind("drift_", 0) == 0) {
        const int axis = parse_number<int>(std::string_view(key).substr(6), "drift axis");
        if (axis < 1 || axis > kMaxDim) throw UsageError("config: drift axis out of range in '" + key + "'");
        if (c.family.drift.size() < static_cast<std::size_t>(axis)) c.family.drift.resize(static_cast<std::size_t>(axis));
        c.family.drift[static_cast<std::size_t>(axis - 1)] = value;
        continue;
      }
      const auto fit = std::find_if(sit->second.begin(), sit->second.end(), [&](const auto& f) { return f.first == key; });
      if (fit == sit->second.end()) throw UsageError("config: unknown key '" + key + "' in [" + section + "]");
      fit->second.set(c, value);
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  try {
    const KvConfig kv = KvConfig::load(path);
    const auto sections = kv.sections();
    if (std::find(sections.begin(), sections.end(), "manifest") == sections.end()) return from_kv(kv);
    return from_kv(RunManifest::from_kv(kv).config);
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

bool RunManifest::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.pass; });
}

void RunManifest::write(const std::filesystem::path& dir) const {
  KvConfig kv;
  kv.set("manifest", "tool_version", tool_version);
  kv.set("manifest", "command", command);
  kv.set("manifest", "wall_clock", format_double(wall_clock));
  for (const auto& c : checks) kv.set("checks", c.name, c.pass ? "PASS" : "FAIL");
  for (std::size_t i = 0; i < artifacts.size(); ++i) kv.set("artifacts", "file_" + std::to_string(i + 1), artifacts[i]);
  for (const std::string& s : config.sections())
    for (const std::string& k : config.keys(s)) kv.set("config." + s, k, config.get(s, k));
  const auto tmp = dir / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw UsageError("cannot write manifest in '" + dir.string() + "'");
    out << kv.dump();
  }
  std::filesystem::rename(tmp, dir / kManifestName);
}

RunManifest RunManifest::read(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  if (!std::filesystem::is_regular_file(path)) throw UsageError("no " + std::string(kManifestName) + " in '" + dir.string() + "'");
  return from_kv(KvConfig::load(path));
}

RunManifest RunManifest::from_kv(const KvConfig& kv) {
  RunManifest m;
  m.tool_version = kv.get("manifest", "tool_version", "");
  m.command = kv.get("manifest", "command", "");
  m.wall_clock = kv.get_double("manifest", "wall_clock", 0.0);
  for (const std::string& k : kv.keys("checks")) m.checks.push_back({k, kv.get("checks", k) == "PASS"});
  for (const std::string& k : kv.keys("artifacts")) m.artifacts.push_back(kv.get("artifacts", k));
  for (const std::string& s : kv.sections())
    if (s.rfind("config.", 0) == 0)
      for (const std::string& k : kv.keys(s)) m.config.set(s.substr(7), k, kv.get(s, k));
  return m;
}

RunLock::RunLock(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw UsageError("cannot create run directory '" + dir_.string() + "': " + ec.message());
  const auto lock = dir_ / ".lock";
  const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) throw UsageError("run directory '" + dir_.string() + "' is locked by another process (" + lock.string() + ")");
    throw UsageError("cannot lock '" + dir_.string() + "': " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  std::filesystem::remove(dir_ / ".lock", ec);
}

void write_value_surface(std::ostream& out, const ValueTable& table) {
  out << "# t y w\n";
  for (int i = 0; i <= table.time_cells(); ++i) {
    if (i > 0) out << '\n';
    for (int j = 0; j < table.space_cells(); ++j)
      out << format_double(table.time(i)) << ' ' << format_double(table.space(j)) << ' ' << format_double(table(i, j)) << '\n';
  }
}

void write_value_table(const std::filesystem::path& path, const ValueTable& table) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << "value-table v1 nt=" << table.time_cells() << " ny=" << table.space_cells()
      << " T=" << format_double(table.horizon()) << " scheme=" << table.scheme << '\n';
  for (int i = 0; i <= table.time_cells(); ++i) {
    for (int j = 0; j < table.space_cells(); ++j) out << (j ? " " : "") << format_double(table(i, j));
    out << '\n';
  }
}

ValueTable read_value_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  std::map<std::string, std::string> fields;
  const auto tokens = words(header);
  if (tokens.size() < 2 || tokens[0] != "value-table" || tokens[1] != "v1") throw UsageError("'" + path.string() + "' is not a value table");
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq != std::string::npos) fields[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  for (const char* key : {"nt", "ny", "T", "scheme"})
    if (!fields.count(key)) throw UsageError("value table header lacks '" + std::string(key) + "'");
  ValueTable t(parse_number<int>(fields["nt"], "nt"), parse_number<int>(fields["ny"], "ny"), parse_number<double>(fields["T"], "T"), fields["scheme"]);
  for (int i = 0; i <= t.time_cells(); ++i)
    for (int j = 0; j < t.space_cells(); ++j) {
      std::string w;
      if (!(in >> w)) throw UsageError("value table '" + path.string() + "' is truncated");
      t(i, j) = parse_number<double>(w, "table value");
    }
  return t;
}

}  // namespace fwmkv::tools
