#include "kghait/settings.hpp"

#include <charconv>
#include <fstream>

#include "kghait/binary_io.hpp"
#include "kghait/error.hpp"

namespace kghait {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Settings Settings::defaults() {
  Settings s;
  s.values_ = {
      // data and run
      {"data", ""},
      {"train", ""},
      {"valid", ""},
      {"test", ""},
      {"out", "run"},
      {"seed", "0"},
      {"jobs", "0"},
      {"baseline", "false"},
      // HIF-entity
      {"hif.T", "4"},
      {"hif.alpha", "0.5"},
      {"hif.semiring", "concrete-max-decay"},
      {"hif.identity_each_step", "true"},
      // squeeze
      {"squeeze.lr", "2.0"},
      {"squeeze.max_iters", "5000"},
      {"squeeze.target", "0.15"},
      // training
      {"model", "transe"},
      {"norm_p", "1"},
      {"margin", "1.0"},
      {"lr", "0.002"},
      {"batch_size", "2000"},
      {"epochs", "200"},
      {"negatives", "1"},
      {"dim", "50"},
      {"relation_dim", "0"},
      {"eval_every", "25"},
      {"patience", "4"},
      {"restore_best", "true"},
      // HIF-relation bootstrap
      {"bootstrap.epochs", "50"},
      {"bootstrap.plateau_window", "5"},
      {"bootstrap.plateau_tolerance", "1e-4"},
      {"bootstrap.lr", "0"},
      // grid search
      {"grid.norm_p", "1,2"},
      {"grid.T", "2,4,6,8,12"},
      {"grid.lr", "0.002,0.0005,0.0002"},
  };
  return s;
}

void Settings::set(std::string_view key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second = std::move(value);
}

void Settings::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": expected key = value");
    }
    set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
}

const std::string& Settings::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

double Settings::get_double(std::string_view key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + std::string(key) + "' is not a number: '" + v + "'");
}

std::int64_t Settings::get_int(std::string_view key) const {
  const auto& v = get(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "' is not an integer: '" + v + "'");
  }
  return out;
}

std::size_t Settings::get_size(std::string_view key) const {
  const auto v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + std::string(key) + "' must not be negative");
  return static_cast<std::size_t>(v);
}

bool Settings::get_bool(std::string_view key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "' is not a boolean: '" + v + "'");
}

std::vector<std::string> Settings::get_list(std::string_view key) const {
  std::vector<std::string> out;
  const auto& v = get(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    auto item = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string Settings::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t Settings::hash() const { return io::fnv1a(to_text()); }

}  // namespace kghait
