#include "fwmkv/kvconfig.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fwmkv {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KvConfig KvConfig::parse(std::string_view text, const std::string& source) {
  KvConfig cfg;
  std::string current;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error(where() + "unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (current.empty()) throw std::runtime_error(where() + "empty section name");
      if (!cfg.section_ptr(current)) cfg.sections_.push_back({current, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(where() + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw std::runtime_error(where() + "empty key");
    if (cfg.has(current, key)) throw std::runtime_error(where() + "duplicate key '" + key + "'");
    cfg.set(current, key, value);
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

KvConfig::Section* KvConfig::section_ptr(const std::string& name) {
  for (Section& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const KvConfig::Section* KvConfig::section_ptr(const std::string& name) const {
  for (const Section& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

bool KvConfig::has(const std::string& section, const std::string& key) const { return find(section, key).has_value(); }

std::optional<std::string> KvConfig::find(const std::string& section, const std::string& key) const {
  const Section* s = section_ptr(section);
  if (!s) return std::nullopt;
  for (const auto& [k, v] : s->entries)
    if (k == key) return v;
  return std::nullopt;
}

std::string KvConfig::get(const std::string& section, const std::string& key) const {
  auto v = find(section, key);
  if (!v) throw std::runtime_error("config: missing key '" + key + "' in section [" + section + "]");
  return *v;
}

std::string KvConfig::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  return find(section, key).value_or(fallback);
}

double KvConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw std::runtime_error("config: [" + section + "] " + key + " is not a number: '" + v + "'");
  return out;
}

double KvConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long KvConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw std::runtime_error("config: [" + section + "] " + key + " is not an integer: '" + v + "'");
  return out;
}

long long KvConfig::get_int(const std::string& section, const std::string& key, long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

void KvConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  Section* s = section_ptr(section);
  if (!s) {
    sections_.push_back({section, {}});
    s = &sections_.back();
  }
  for (auto& [k, v] : s->entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  s->entries.emplace_back(key, value);
}

std::vector<std::string> KvConfig::sections() const {
  std::vector<std::string> out;
  for (const Section& s : sections_) out.push_back(s.name);
  return out;
}

std::vector<std::string> KvConfig::keys(const std::string& section) const {
  std::vector<std::string> out;
  if (const Section* s = section_ptr(section))
    for (const auto& kv : s->entries) out.push_back(kv.first);
  return out;
}

std::string KvConfig::dump() const {
  std::string out;
  bool first = true;
  for (const Section& s : sections_) {
    if (s.entries.empty() && s.name.empty()) continue;
    if (!s.name.empty()) {
      if (!first) out += '\n';
      out += "[" + s.name + "]\n";
    }
    for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
    first = false;
  }
  return out;
}

}  // namespace fwmkv
