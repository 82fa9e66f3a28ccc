#pragma once

#include <cmath>
#include <ostream>

/// \file jet.hpp
///
/// Second-order forward jets over the computational coordinates (xi, eta).
///
/// A Jet2 carries a value with its two first partials and three second
/// partials. The mixed partial is stored once, so symmetry holds by
/// construction. Every forward operation has a matching `*_adjoint` that
/// pulls an output adjoint back onto the inputs; the network and loss
/// gradients are assembled from these.

namespace meshpinn {

enum class Axis { xi, eta };

struct Jet2 {
  double v = 0.0;
  double d_xi = 0.0;
  double d_eta = 0.0;
  double d_xixi = 0.0;
  double d_xieta = 0.0;
  double d_etaeta = 0.0;

  constexpr Jet2& operator+=(const Jet2& o) {
    v += o.v;
    d_xi += o.d_xi;
    d_eta += o.d_eta;
    d_xixi += o.d_xixi;
    d_xieta += o.d_xieta;
    d_etaeta += o.d_etaeta;
    return *this;
  }

  constexpr Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    d_xi -= o.d_xi;
    d_eta -= o.d_eta;
    d_xixi -= o.d_xixi;
    d_xieta -= o.d_xieta;
    d_etaeta -= o.d_etaeta;
    return *this;
  }

  constexpr Jet2& operator*=(double c) {
    v *= c;
    d_xi *= c;
    d_eta *= c;
    d_xixi *= c;
    d_xieta *= c;
    d_etaeta *= c;
    return *this;
  }

  friend constexpr bool operator==(const Jet2&, const Jet2&) = default;
};

constexpr Jet2 jet_const(double c) { return Jet2{c, 0, 0, 0, 0, 0}; }

constexpr Jet2 jet_var(Axis axis, double value) {
  return axis == Axis::xi ? Jet2{value, 1, 0, 0, 0, 0} : Jet2{value, 0, 1, 0, 0, 0};
}

constexpr Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
constexpr Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
constexpr Jet2 operator-(Jet2 a) { return a *= -1.0; }
constexpr Jet2 operator*(Jet2 a, double c) { return a *= c; }
constexpr Jet2 operator*(double c, Jet2 a) { return a *= c; }

constexpr Jet2 jet_add(const Jet2& a, const Jet2& b) { return a + b; }
constexpr Jet2 jet_scale(const Jet2& a, double c) { return a * c; }

/// Leibniz rule to second order.
constexpr Jet2 jet_mul(const Jet2& a, const Jet2& b) {
  return Jet2{
      a.v * b.v,
      a.d_xi * b.v + a.v * b.d_xi,
      a.d_eta * b.v + a.v * b.d_eta,
      a.d_xixi * b.v + 2.0 * a.d_xi * b.d_xi + a.v * b.d_xixi,
      a.d_xieta * b.v + a.d_xi * b.d_eta + a.d_eta * b.d_xi + a.v * b.d_xieta,
      a.d_etaeta * b.v + 2.0 * a.d_eta * b.d_eta + a.v * b.d_etaeta,
  };
}

constexpr Jet2 operator*(const Jet2& a, const Jet2& b) { return jet_mul(a, b); }

inline Jet2 jet_tanh(const Jet2& a) {
  const double s = std::tanh(a.v);
  const double s1 = 1.0 - s * s;
  const double s2 = -2.0 * s * s1;
  return Jet2{
      s,
      s1 * a.d_xi,
      s1 * a.d_eta,
      s2 * a.d_xi * a.d_xi + s1 * a.d_xixi,
      s2 * a.d_xi * a.d_eta + s1 * a.d_xieta,
      s2 * a.d_eta * a.d_eta + s1 * a.d_etaeta,
  };
}

inline bool is_finite(const Jet2& a) {
  return std::isfinite(a.v) && std::isfinite(a.d_xi) && std::isfinite(a.d_eta) &&
         std::isfinite(a.d_xixi) && std::isfinite(a.d_xieta) && std::isfinite(a.d_etaeta);
}

inline std::ostream& operator<<(std::ostream& os, const Jet2& a) {
  return os << '(' << a.v << "; " << a.d_xi << ", " << a.d_eta << "; " << a.d_xixi << ", "
            << a.d_xieta << ", " << a.d_etaeta << ')';
}

// ---------------------------------------------------------------------------
// Scalar lifts and adjoints.
//
// The network is written once as a template over its element type; these
// overloads make `double` and `Jet2` interchangeable there.

inline double activation(double a) { return std::tanh(a); }
inline Jet2 activation(const Jet2& a) { return jet_tanh(a); }

constexpr double value_of(double a) { return a; }
constexpr double value_of(const Jet2& a) { return a.v; }

/// Sum over all stored fields of a*b. Used to accumulate weight adjoints:
/// for y = w*x + ..., dL/dw = <ybar, x>.
constexpr double contract(double a, double b) { return a * b; }
constexpr double contract(const Jet2& a, const Jet2& b) {
  return a.v * b.v + a.d_xi * b.d_xi + a.d_eta * b.d_eta + a.d_xixi * b.d_xixi +
         a.d_xieta * b.d_xieta + a.d_etaeta * b.d_etaeta;
}

/// Adjoint of tanh. `in` is the forward input, `out_bar` the adjoint of the
/// forward output; returns the adjoint of the input.
inline double activation_adjoint(double in, double out_bar) {
  const double s = std::tanh(in);
  return out_bar * (1.0 - s * s);
}

inline Jet2 activation_adjoint(const Jet2& a, const Jet2& ob) {
  const double s = std::tanh(a.v);
  const double s1 = 1.0 - s * s;
  const double s2 = -2.0 * s * s1;
  const double s3 = s1 * (6.0 * s * s - 2.0);
  Jet2 ab;
  ab.d_xixi = ob.d_xixi * s1;
  ab.d_xieta = ob.d_xieta * s1;
  ab.d_etaeta = ob.d_etaeta * s1;
  ab.d_xi = ob.d_xi * s1 + s2 * (2.0 * ob.d_xixi * a.d_xi + ob.d_xieta * a.d_eta);
  ab.d_eta = ob.d_eta * s1 + s2 * (2.0 * ob.d_etaeta * a.d_eta + ob.d_xieta * a.d_xi);
  ab.v = ob.v * s1 +
         s2 * (ob.d_xi * a.d_xi + ob.d_eta * a.d_eta + ob.d_xixi * a.d_xixi +
               ob.d_xieta * a.d_xieta + ob.d_etaeta * a.d_etaeta) +
         s3 * (ob.d_xixi * a.d_xi * a.d_xi + ob.d_xieta * a.d_xi * a.d_eta +
               ob.d_etaeta * a.d_eta * a.d_eta);
  return ab;
}

/// Adjoint of c = a*b with respect to `a` (swap arguments for `b`).
constexpr double mul_adjoint(double /*a*/, double b, double cb) { return cb * b; }

constexpr Jet2 mul_adjoint(const Jet2& /*a*/, const Jet2& b, const Jet2& cb) {
  return Jet2{
      contract(cb, b),
      cb.d_xi * b.v + 2.0 * cb.d_xixi * b.d_xi + cb.d_xieta * b.d_eta,
      cb.d_eta * b.v + 2.0 * cb.d_etaeta * b.d_eta + cb.d_xieta * b.d_xi,
      cb.d_xixi * b.v,
      cb.d_xieta * b.v,
      cb.d_etaeta * b.v,
  };
}

}  // namespace meshpinn
