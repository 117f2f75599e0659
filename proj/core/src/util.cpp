#include "latplan/util.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace latplan {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string fmt_double(double v) {
  if (v == 0.0) return "0";  // avoid "-0"
  double r = std::round(v);
  if (r == v && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return std::string(buf);
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto sp = t.find_first_of(" \t");
    if (sp == std::string::npos) {
      kv.entries_[t] = "";
    } else {
      kv.entries_[t.substr(0, sp)] = trim(t.substr(sp + 1));
    }
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  return parse(read_file(path));
}

double KeyValueFile::get_double(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::runtime_error("config: missing key '" + key + "'");
  return std::stod(it->second);
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::stod(it->second);
}

std::string KeyValueFile::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::runtime_error("config: missing key '" + key + "'");
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  auto parts = split_ws(get_string(key));
  std::vector<double> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(std::stod(p));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("short write: " + path);
}

std::string dir_name(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string() : path.substr(0, pos);
}

std::string join_path(const std::string& dir, const std::string& rel) {
  if (rel.empty() || rel.front() == '/' || dir.empty()) return rel;
  return dir + "/" + rel;
}

}  // namespace latplan
