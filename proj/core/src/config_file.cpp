#include "alpool/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "alpool/errors.hpp"

namespace alpool {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line_no, const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(line_no) + ": " + what);
}

template <typename T>
T from_text(const std::string& origin, const std::string& section, const std::string& key,
            const std::string& text, const char* kind) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw ParseError(origin + ": [" + section + "] " + key + " = '" + text + "' is not " + kind);
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(origin, line_no, "empty section name");
      cfg.values_[section];  // remember even if empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(origin, line_no, "empty key");
    cfg.values_[section][key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  return s != values_.end() && s->second.contains(key);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  if (s != values_.end()) {
    auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  throw ParseError(origin_ + ": missing required key [" + section + "] " + key);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key) const {
  return from_text<std::int64_t>(origin_, section, key, get_string(section, key), "an integer");
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                                 std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key) const {
  return from_text<std::uint64_t>(origin_, section, key, get_string(section, key),
                                  "an unsigned integer");
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
  return has(section, key) ? get_u64(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
  return from_text<double>(origin_, section, key, get_string(section, key), "a number");
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError(origin_ + ": [" + section + "] " + key + " = '" + v + "' is not a boolean");
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  return has(section, key) ? get_bool(section, key) : fallback;
}

std::vector<std::string> ConfigFile::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

std::vector<std::string> ConfigFile::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto s = values_.find(section);
  if (s != values_.end())
    for (const auto& [key, _] : s->second) out.push_back(key);
  return out;
}

}  // namespace alpool
