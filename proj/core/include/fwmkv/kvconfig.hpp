#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fwmkv {

/// Flat key-value text with [section] headers. Keys before any header live in section "".
/// Order is preserved so that dump() round-trips what parse() read, comments aside.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text, const std::string& source = "<string>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;
  /// Throws std::runtime_error naming section and key when absent.
  std::string get(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  std::string dump() const;
  friend bool operator==(const KvConfig&, const KvConfig&) = default;

 private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
    friend bool operator==(const Section&, const Section&) = default;
  };
  Section* section_ptr(const std::string& name);
  const Section* section_ptr(const std::string& name) const;

  std::vector<Section> sections_;
};

}  // namespace fwmkv
