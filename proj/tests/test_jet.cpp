#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fd_oracle.hpp"
#include "meshpinn/jet.hpp"

using namespace meshpinn;
using meshpinn::testing::close;
using meshpinn::testing::fd_jet;

namespace {

void expect_jet(const Jet2& a, const Jet2& b) {
  EXPECT_DOUBLE_EQ(a.v, b.v);
  EXPECT_DOUBLE_EQ(a.d_xi, b.d_xi);
  EXPECT_DOUBLE_EQ(a.d_eta, b.d_eta);
  EXPECT_DOUBLE_EQ(a.d_xixi, b.d_xixi);
  EXPECT_DOUBLE_EQ(a.d_xieta, b.d_xieta);
  EXPECT_DOUBLE_EQ(a.d_etaeta, b.d_etaeta);
}

// A random expression tree over {add, mul, tanh, scale} with leaves xi, eta
// and constants. Evaluated generically so the same tree yields a jet and a
// plain double for the finite-difference oracle.
struct Expr {
  enum Kind { leaf_xi, leaf_eta, leaf_const, add, mul, tanh_, scale } kind;
  double c = 0.0;
  int a = -1, b = -1;
};

std::vector<Expr> random_expr(std::mt19937_64& rng, int ops) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Expr> e{{Expr::leaf_xi}, {Expr::leaf_eta}, {Expr::leaf_const, u(rng)}};
  for (int k = 0; k < ops; ++k) {
    const int n = static_cast<int>(e.size());
    std::uniform_int_distribution<int> pick(0, n - 1);
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
      case 0: e.push_back({Expr::add, 0, pick(rng), pick(rng)}); break;
      case 1: e.push_back({Expr::mul, 0, pick(rng), pick(rng)}); break;
      case 2: e.push_back({Expr::tanh_, 0, pick(rng)}); break;
      default: e.push_back({Expr::scale, 1.5 * u(rng), pick(rng)}); break;
    }
  }
  return e;
}

template <class T, class VarXi, class VarEta, class Const, class Tanh>
T eval_expr(const std::vector<Expr>& e, VarXi var_xi, VarEta var_eta, Const cst, Tanh th) {
  std::vector<T> val;
  val.reserve(e.size());
  for (const auto& n : e) {
    switch (n.kind) {
      case Expr::leaf_xi: val.push_back(var_xi()); break;
      case Expr::leaf_eta: val.push_back(var_eta()); break;
      case Expr::leaf_const: val.push_back(cst(n.c)); break;
      case Expr::add: val.push_back(val[n.a] + val[n.b]); break;
      case Expr::mul: val.push_back(val[n.a] * val[n.b]); break;
      case Expr::tanh_: val.push_back(th(val[n.a])); break;
      case Expr::scale: val.push_back(n.c * val[n.a]); break;
    }
  }
  return val.back();
}

}  // namespace

TEST(Jet, ConstExamples) {
  expect_jet(jet_const(0.0), Jet2{0, 0, 0, 0, 0, 0});
  expect_jet(jet_const(1.0), Jet2{1, 0, 0, 0, 0, 0});
  expect_jet(jet_const(-2.5), Jet2{-2.5, 0, 0, 0, 0, 0});
}

TEST(Jet, VarExamples) {
  expect_jet(jet_var(Axis::xi, 0.3), Jet2{0.3, 1, 0, 0, 0, 0});
  expect_jet(jet_var(Axis::eta, 0.9), Jet2{0.9, 0, 1, 0, 0, 0});
  expect_jet(jet_var(Axis::xi, 0.0), Jet2{0, 1, 0, 0, 0, 0});
}

TEST(Jet, AddScaleExamples) {
  const Jet2 a{0.3, -1.2, 0.7, 2.0, -0.4, 0.1};
  EXPECT_EQ(jet_add(a, jet_const(0.0)), a);
  EXPECT_EQ(jet_scale(a, 1.0), a);
  expect_jet(jet_add(jet_var(Axis::xi, 2), jet_var(Axis::eta, 3)), Jet2{5, 1, 1, 0, 0, 0});
}

TEST(Jet, MulExamples) {
  const double x = 0.7, y = -0.4;
  expect_jet(jet_mul(jet_var(Axis::xi, x), jet_var(Axis::eta, y)), Jet2{x * y, y, x, 0, 1, 0});
  expect_jet(jet_mul(jet_var(Axis::xi, x), jet_var(Axis::xi, x)), Jet2{x * x, 2 * x, 0, 2, 0, 0});
}

TEST(Jet, TanhExamples) {
  expect_jet(jet_tanh(jet_var(Axis::xi, 0.0)), Jet2{0, 1, 0, 0, 0, 0});
  expect_jet(jet_tanh(jet_const(0.8)), Jet2{std::tanh(0.8), 0, 0, 0, 0, 0});
  const Jet2 t = jet_tanh(Jet2{0.5, 1, 0, 0, 0, 0});
  const double s = std::tanh(0.5);
  EXPECT_NEAR(t.d_xixi, -2.0 * s * (1.0 - s * s), 1e-15);
  const auto fd = fd_jet([](double xi, double) { return std::tanh(xi); }, 0.5, 0.0);
  EXPECT_TRUE(close(t.d_xixi, fd.d_xixi, 1e-5, 1e-6));
}

TEST(Jet, MulMatchesFiniteDifferencesOnRandomJets) {
  // a and b are random quadratics in (xi, eta); their jets at (xi0, eta0)
  // are exact, so the product jet can be compared to FD of the product.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    double ca[6], cb[6];
    for (double& c : ca) c = u(rng);
    for (double& c : cb) c = u(rng);
    auto quad = [](const double* c, double xi, double eta) {
      return c[0] + c[1] * xi + c[2] * eta + c[3] * xi * xi + c[4] * xi * eta + c[5] * eta * eta;
    };
    auto quad_jet = [](const double* c, double xi, double eta) {
      return Jet2{c[0] + c[1] * xi + c[2] * eta + c[3] * xi * xi + c[4] * xi * eta +
                      c[5] * eta * eta,
                  c[1] + 2 * c[3] * xi + c[4] * eta,
                  c[2] + c[4] * xi + 2 * c[5] * eta,
                  2 * c[3],
                  c[4],
                  2 * c[5]};
    };
    const double xi = u(rng), eta = u(rng);
    const Jet2 p = jet_mul(quad_jet(ca, xi, eta), quad_jet(cb, xi, eta));
    const auto fd = fd_jet([&](double a, double b) { return quad(ca, a, b) * quad(cb, a, b); }, xi,
                           eta);
    EXPECT_TRUE(close(p.d_xi, fd.d_xi, 1e-5, 1e-6));
    EXPECT_TRUE(close(p.d_eta, fd.d_eta, 1e-5, 1e-6));
    EXPECT_TRUE(close(p.d_xixi, fd.d_xixi, 1e-3, 1e-6));
    EXPECT_TRUE(close(p.d_xieta, fd.d_xieta, 1e-3, 1e-6));
    EXPECT_TRUE(close(p.d_etaeta, fd.d_etaeta, 1e-3, 1e-6));
  }
}

TEST(Jet, RandomCompositionsMatchFiniteDifferences) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto e = random_expr(rng, 8);
    const double xi0 = u(rng), eta0 = u(rng);
    const Jet2 j = eval_expr<Jet2>(
        e, [&] { return jet_var(Axis::xi, xi0); }, [&] { return jet_var(Axis::eta, eta0); },
        [](double c) { return jet_const(c); }, [](const Jet2& a) { return jet_tanh(a); });
    const auto fd = fd_jet(
        [&](double xi, double eta) {
          return eval_expr<double>(
              e, [&] { return xi; }, [&] { return eta; }, [](double c) { return c; },
              [](double a) { return std::tanh(a); });
        },
        xi0, eta0);
    EXPECT_TRUE(is_finite(j));
    const bool ok = close(j.v, fd.v, 1e-12, 1e-12) && close(j.d_xi, fd.d_xi, 1e-5, 1e-6) &&
                    close(j.d_eta, fd.d_eta, 1e-5, 1e-6) &&
                    close(j.d_xixi, fd.d_xixi, 1e-3, 1e-6) &&
                    close(j.d_xieta, fd.d_xieta, 1e-3, 1e-6) &&
                    close(j.d_etaeta, fd.d_etaeta, 1e-3, 1e-6);
    if (!ok) {
      ++failures;
      ADD_FAILURE() << "trial " << trial << ": jet " << j << " fd (" << fd.v << "; " << fd.d_xi
                    << ", " << fd.d_eta << "; " << fd.d_xixi << ", " << fd.d_xieta << ", "
                    << fd.d_etaeta << ")";
    }
  }
  EXPECT_EQ(failures, 0);
}

TEST(Jet, ActivationAdjointMatchesFiniteDifferences) {
  // Pull back a random output adjoint through tanh and compare against FD of
  // <out_bar, tanh(a)> with respect to each input field.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Jet2 a{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const Jet2 ob{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const Jet2 ab = activation_adjoint(a, ob);
    double Jet2::*fields[] = {&Jet2::v,      &Jet2::d_xi,    &Jet2::d_eta,
                              &Jet2::d_xixi, &Jet2::d_xieta, &Jet2::d_etaeta};
    for (auto f : fields) {
      const double h = 1e-6;
      Jet2 p = a, m = a;
      p.*f += h;
      m.*f -= h;
      const double fd = (contract(ob, jet_tanh(p)) - contract(ob, jet_tanh(m))) / (2 * h);
      EXPECT_TRUE(close(ab.*f, fd, 1e-6, 1e-8)) << ab.*f << " vs " << fd;
    }
  }
}
