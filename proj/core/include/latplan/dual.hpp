#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace latplan {

/// Forward-mode AD scalar carrying K directional derivatives alongside the
/// value. One pass through the dynamics propagates K columns of the Jacobian,
/// so a full gradient over n variables costs ceil(n / K) passes.
template <int K>
struct Dual {
  double v = 0.0;
  std::array<double, K> d{};

  Dual() = default;
  Dual(double value) : v(value) { d.fill(0.0); }  // NOLINT: implicit by design

  static Dual seed(double value, int lane) {
    Dual x(value);
    x.d[lane] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < K; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < K; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < K; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
};

template <int K>
inline Dual<K> operator+(Dual<K> a, const Dual<K>& b) { return a += b; }
template <int K>
inline Dual<K> operator-(Dual<K> a, const Dual<K>& b) { return a -= b; }
template <int K>
inline Dual<K> operator*(Dual<K> a, const Dual<K>& b) { return a *= b; }

template <int K>
inline Dual<K> operator-(const Dual<K>& a) {
  Dual<K> r;
  r.v = -a.v;
  for (int i = 0; i < K; ++i) r.d[i] = -a.d[i];
  return r;
}

// Mixed double/Dual arithmetic; template deduction needs explicit overloads.
template <int K>
inline Dual<K> operator+(double a, Dual<K> b) { return b += Dual<K>(a); }
template <int K>
inline Dual<K> operator+(Dual<K> a, double b) { return a += Dual<K>(b); }
template <int K>
inline Dual<K> operator-(double a, const Dual<K>& b) { return Dual<K>(a) - b; }
template <int K>
inline Dual<K> operator-(Dual<K> a, double b) { return a -= Dual<K>(b); }
template <int K>
inline Dual<K> operator*(double a, Dual<K> b) {
  b.v *= a;
  for (int i = 0; i < K; ++i) b.d[i] *= a;
  return b;
}
template <int K>
inline Dual<K> operator*(Dual<K> a, double b) {
  a.v *= b;
  for (int i = 0; i < K; ++i) a.d[i] *= b;
  return a;
}
template <int K>
inline Dual<K> operator/(const Dual<K>& a, double b) { return a * (1.0 / b); }
template <int K>
inline Dual<K> operator/(double a, const Dual<K>& b) { return Dual<K>(a) / b; }

template <int K>
inline Dual<K> operator/(const Dual<K>& a, const Dual<K>& b) {
  Dual<K> r;
  double inv = 1.0 / b.v;
  r.v = a.v * inv;
  for (int i = 0; i < K; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}

template <int K>
inline Dual<K> chain(double fv, double dfv, const Dual<K>& x) {
  Dual<K> r;
  r.v = fv;
  for (int i = 0; i < K; ++i) r.d[i] = dfv * x.d[i];
  return r;
}

template <int K>
inline Dual<K> sin(const Dual<K>& x) { return chain(std::sin(x.v), std::cos(x.v), x); }
template <int K>
inline Dual<K> cos(const Dual<K>& x) { return chain(std::cos(x.v), -std::sin(x.v), x); }
template <int K>
inline Dual<K> tan(const Dual<K>& x) {
  double t = std::tan(x.v);
  return chain(t, 1.0 + t * t, x);
}
template <int K>
inline Dual<K> sqrt(const Dual<K>& x) {
  double s = std::sqrt(x.v);
  return chain(s, 0.5 / s, x);
}
template <int K>
inline Dual<K> exp(const Dual<K>& x) {
  double e = std::exp(x.v);
  return chain(e, e, x);
}

/// Plain-double overload set so the dynamics template works for both types.
inline double value_of(double x) { return x; }
template <int K>
inline double value_of(const Dual<K>& x) { return x.v; }

}  // namespace latplan

// Bring math names into scope for unqualified template use on doubles.
namespace latplan::adm {
using std::cos;
using std::exp;
using std::sin;
using std::sqrt;
using std::tan;
using latplan::cos;
using latplan::exp;
using latplan::sin;
using latplan::sqrt;
using latplan::tan;
}  // namespace latplan::adm
