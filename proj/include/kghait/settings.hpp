#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kghait {

/// Flat run configuration: a fixed set of known keys with string values.
/// Sources are layered by calling merge_file / set in order; later wins.
class Settings {
 public:
  /// Every known key with its default value.
  static Settings defaults();

  /// Throws ConfigError for an unknown key.
  void set(std::string_view key, std::string value);
  /// Applies "key = value" lines; '#' starts a comment.
  void merge_file(const std::filesystem::path& path);

  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;

  const std::map<std::string, std::string, std::less<>>& values() const noexcept { return values_; }

  /// Sorted "key = value" lines; what merge_file reads back.
  std::string to_text() const;
  /// FNV-1a of to_text().
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace kghait
