#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace latplan {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle to (-pi, pi].
inline double norm_angle(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

inline double sq(double x) { return x * x; }

inline int sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// 64-bit FNV-1a over raw bytes; used to fingerprint configs and files.
class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  void add(std::string_view s) { add(s.data(), s.size()); }
  void add(double v) { add(&v, sizeof(v)); }
  void add(std::int64_t v) { add(&v, sizeof(v)); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

std::string hex64(std::uint64_t v);

/// Formats a double so that parsing the result reproduces the exact bits.
/// Integral values print without an exponent ("5" not "5.0000...e+00").
std::string fmt_double(double v);

std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);

/// Minimal "key value..." config file: one entry per line, '#' comments,
/// later keys override earlier ones.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Directory part of a path ("" when the path has no directory component).
std::string dir_name(const std::string& path);
/// Joins base directory and a possibly relative path.
std::string join_path(const std::string& dir, const std::string& rel);

}  // namespace latplan
