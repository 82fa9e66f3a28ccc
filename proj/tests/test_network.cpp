#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fd_oracle.hpp"
#include "meshpinn/network.hpp"
#include "test_shapes.hpp"

using namespace meshpinn;
using meshpinn::testing::close;
using meshpinn::testing::fd_jet;

namespace {

MeshNetParams random_params(int L, int H, Architecture arch, std::uint64_t seed,
                            double bias_scale = 0.3) {
  auto p = init_params(L, H, seed, arch);
  // Non-zero biases so every code path sees them.
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-bias_scale, bias_scale);
  for (double& v : p.flat())
    if (v == 0.0) v = u(rng);
  return p;
}

}  // namespace

TEST(Layout, ParameterCounts) {
  const MeshNetParams p(4, 30);
  EXPECT_EQ(p.sub_size(), 3091u);
  EXPECT_EQ(p.size(), 6182u);
  const MeshNetParams q(4, 30, Architecture::plain);
  EXPECT_EQ(q.sub_size(), 3u * 30 + 3u * (30 * 30 + 30) + 31u);
  EXPECT_THROW(MeshNetParams(0, 30), InputError);
}

TEST(Init, DeterministicWithZeroBiases) {
  const auto a = init_params(4, 30, 42);
  const auto b = init_params(4, 30, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_params(4, 30, 43));
  const auto& lay = a.layout();
  for (int net = 0; net < 2; ++net) {
    const auto s = a.sub(net);
    for (int j = 0; j < 30; ++j) {
      EXPECT_EQ(s[lay.branch1 + 60 + j], 0.0);
      EXPECT_EQ(s[lay.branch2 + 60 + j], 0.0);
      EXPECT_EQ(s[lay.input + 60 + j], 0.0);
    }
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 30; ++j) EXPECT_EQ(s[lay.hidden_block(k) + 900 + j], 0.0);
    EXPECT_EQ(s[lay.out + 30], 0.0);
  }
}

TEST(Forward, ZeroParamsGiveZero) {
  const MeshNetParams p(4, 30);
  const Vec2 r = forward(p, 0.3, 0.8);
  EXPECT_EQ(r.x, 0.0);
  EXPECT_EQ(r.y, 0.0);
  const auto [xj, yj] = forward_jet(p, 0.3, 0.8);
  EXPECT_EQ(xj, Jet2{});
  EXPECT_EQ(yj, Jet2{});
}

TEST(Forward, HandComputedOneLayer) {
  // L = 1: out = W_out . tanh(W_1 [xi, eta] + b_1) + b_out. The gate
  // branches exist but no gated block consumes them.
  MeshNetParams p(1, 2);
  const auto& lay = p.layout();
  auto s = p.flat();
  const double W1[4] = {0.1, -0.2, 0.3, 0.4};
  const double b1[2] = {0.05, -0.1};
  const double Wout[2] = {0.7, -0.5};
  const double bout = 0.2;
  for (int k = 0; k < 4; ++k) s[lay.input + k] = W1[k];
  for (int k = 0; k < 2; ++k) s[lay.input + 4 + k] = b1[k];
  for (int k = 0; k < 2; ++k) s[lay.out + k] = Wout[k];
  s[lay.out + 2] = bout;
  const double xi = 0.6, eta = 0.25;
  const double h0 = std::tanh(0.1 * xi - 0.2 * eta + 0.05);
  const double h1 = std::tanh(0.3 * xi + 0.4 * eta - 0.1);
  const double want = 0.7 * h0 - 0.5 * h1 + 0.2;
  EXPECT_NEAR(forward(p, xi, eta).x, want, 1e-12);
  EXPECT_EQ(forward(p, xi, eta).y, 0.0);
}

TEST(Forward, HandComputedGatedBlock) {
  // L = 2, H = 2: one gated block, h2 = u + z (w - u).
  MeshNetParams p(2, 2);
  const auto& lay = p.layout();
  auto s = p.flat();
  const double Wb1[6] = {0.2, 0.1, -0.3, 0.5, 0.0, 0.1};   // W (2x2) then b (2)
  const double Wb2[6] = {-0.4, 0.3, 0.2, 0.2, 0.05, 0.0};
  const double W1[6] = {0.1, -0.2, 0.3, 0.4, 0.05, -0.1};
  const double Wz[6] = {0.6, -0.3, 0.2, 0.9, 0.1, -0.2};
  for (int k = 0; k < 6; ++k) {
    s[lay.branch1 + k] = Wb1[k];
    s[lay.branch2 + k] = Wb2[k];
    s[lay.input + k] = W1[k];
    s[lay.hidden_block(0) + k] = Wz[k];
  }
  s[lay.out + 0] = 0.7;
  s[lay.out + 1] = -0.5;
  s[lay.out + 2] = 0.2;
  const double xi = 0.6, eta = 0.25;
  auto aff = [&](const double* W, int j) { return W[2 * j] * xi + W[2 * j + 1] * eta + W[4 + j]; };
  double u[2], w[2], h1[2], z[2], h2[2];
  for (int j = 0; j < 2; ++j) {
    u[j] = std::tanh(aff(Wb1, j));
    w[j] = std::tanh(aff(Wb2, j));
    h1[j] = std::tanh(aff(W1, j));
  }
  for (int j = 0; j < 2; ++j) {
    z[j] = std::tanh(Wz[2 * j] * h1[0] + Wz[2 * j + 1] * h1[1] + Wz[4 + j]);
    h2[j] = u[j] + z[j] * (w[j] - u[j]);
  }
  EXPECT_NEAR(forward(p, xi, eta).x, 0.7 * h2[0] - 0.5 * h2[1] + 0.2, 1e-12);
}

TEST(Forward, ZeroGateKeepsFirstBranch) {
  // With W'_k = 0 and b'_k = 0 the gate is tanh(0) = 0, so h_{k+1} = u.
  auto p = random_params(2, 3, Architecture::gated, 5);
  const auto& lay = p.layout();
  auto s = p.flat();
  for (std::size_t k = 0; k < 9 + 3; ++k) s[lay.hidden_block(0) + k] = 0.0;
  SubNetTape<double> tape;
  subnet_forward(lay, p.sub(0), 0.4, 0.7, tape);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(tape.h[3 + j], tape.u[j]);
}

TEST(Forward, GateIdentityHolds) {
  const auto p = random_params(4, 8, Architecture::gated, 9);
  SubNetTape<double> tape;
  subnet_forward(p.layout(), p.sub(1), 0.2, 0.9, tape);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 8; ++j)
      EXPECT_NEAR(tape.h[(k + 1) * 8 + j], tape.u[j] + tape.z[k * 8 + j] * (tape.w[j] - tape.u[j]),
                  1e-15);
}

TEST(ForwardJet, ValueMatchesForwardBitwise) {
  for (auto arch : {Architecture::gated, Architecture::plain}) {
    const auto p = random_params(4, 30, arch, 17);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      const double xi = u(rng), eta = u(rng);
      const auto [xj, yj] = forward_jet(p, xi, eta);
      const Vec2 r = forward(p, xi, eta);
      EXPECT_EQ(xj.v, r.x);
      EXPECT_EQ(yj.v, r.y);
    }
  }
}

TEST(ForwardJet, DerivativesMatchFiniteDifferences) {
  for (auto arch : {Architecture::gated, Architecture::plain}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = random_params(4, 30, arch, seed);
      std::mt19937_64 rng(seed + 100);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int k = 0; k < 20; ++k) {
        const double xi = u(rng), eta = u(rng);
        const auto [xj, yj] = forward_jet(p, xi, eta);
        for (int comp = 0; comp < 2; ++comp) {
          const Jet2& j = comp == 0 ? xj : yj;
          const auto fd = fd_jet(
              [&](double a, double b) {
                const Vec2 r = forward(p, a, b);
                return comp == 0 ? r.x : r.y;
              },
              xi, eta);
          EXPECT_TRUE(close(j.d_xi, fd.d_xi, 1e-5, 1e-6)) << j.d_xi << " " << fd.d_xi;
          EXPECT_TRUE(close(j.d_eta, fd.d_eta, 1e-5, 1e-6)) << j.d_eta << " " << fd.d_eta;
          EXPECT_TRUE(close(j.d_xixi, fd.d_xixi, 1e-3, 1e-6)) << j.d_xixi << " " << fd.d_xixi;
          EXPECT_TRUE(close(j.d_xieta, fd.d_xieta, 1e-3, 1e-6)) << j.d_xieta << " " << fd.d_xieta;
          EXPECT_TRUE(close(j.d_etaeta, fd.d_etaeta, 1e-3, 1e-6))
              << j.d_etaeta << " " << fd.d_etaeta;
        }
      }
    }
  }
}

TEST(Backward, HandComputedOneLayer) {
  // loss = (out - 1)^2 for the L = 1, H = 2 net; d loss / d theta by hand.
  MeshNetParams p(1, 2, Architecture::plain);
  const auto& lay = p.layout();
  auto s = p.flat();
  const double W1[6] = {0.1, -0.2, 0.3, 0.4, 0.05, -0.1};
  for (int k = 0; k < 6; ++k) s[lay.input + k] = W1[k];
  s[lay.out + 0] = 0.7;
  s[lay.out + 1] = -0.5;
  s[lay.out + 2] = 0.2;
  const double xi = 0.6, eta = 0.25;
  const double h0 = std::tanh(0.1 * xi - 0.2 * eta + 0.05);
  const double h1 = std::tanh(0.3 * xi + 0.4 * eta - 0.1);
  const double out = 0.7 * h0 - 0.5 * h1 + 0.2;
  const double ob = 2.0 * (out - 1.0);

  SubNetTape<double> tape;
  subnet_forward(lay, p.sub(0), xi, eta, tape);
  std::vector<double> g(lay.size, 0.0);
  subnet_backward(lay, p.sub(0), tape, ob, std::span<double>(g));

  const double d0 = ob * 0.7 * (1 - h0 * h0);
  const double d1 = ob * -0.5 * (1 - h1 * h1);
  EXPECT_NEAR(g[lay.out + 0], ob * h0, 1e-14);
  EXPECT_NEAR(g[lay.out + 1], ob * h1, 1e-14);
  EXPECT_NEAR(g[lay.out + 2], ob, 1e-14);
  EXPECT_NEAR(g[lay.input + 0], d0 * xi, 1e-14);
  EXPECT_NEAR(g[lay.input + 1], d0 * eta, 1e-14);
  EXPECT_NEAR(g[lay.input + 2], d1 * xi, 1e-14);
  EXPECT_NEAR(g[lay.input + 3], d1 * eta, 1e-14);
  EXPECT_NEAR(g[lay.input + 4], d0, 1e-14);
  EXPECT_NEAR(g[lay.input + 5], d1, 1e-14);
}

TEST(Backward, ZeroParamsStationaryOutputBias) {
  // loss = out^2 with all-zero params: out = 0 so every adjoint vanishes.
  const MeshNetParams p(4, 30);
  SubNetTape<double> tape;
  const double out = subnet_forward(p.layout(), p.sub(0), 0.3, 0.4, tape);
  std::vector<double> g(p.sub_size(), 0.0);
  subnet_backward(p.layout(), p.sub(0), tape, 2.0 * out, std::span<double>(g));
  EXPECT_EQ(g[p.layout().out + 30], 0.0);
}

TEST(Backward, MatchesFiniteDifferences) {
  // loss = sum over a few points of (x - a)^2 + (y - b)^2, both architectures.
  for (auto arch : {Architecture::gated, Architecture::plain}) {
    auto p = random_params(3, 6, arch, 21);
    const std::vector<std::array<double, 4>> pts{
        {0.1, 0.2, 0.3, -0.1}, {0.7, 0.4, 0.8, 0.5}, {0.5, 0.9, -0.2, 1.1}};
    auto loss = [&](const std::vector<double>& v) {
      const MeshNetParams q(p.layers(), p.neurons(), arch, v);
      double s = 0.0;
      for (const auto& t : pts) {
        const Vec2 r = forward(q, t[0], t[1]);
        s += (r.x - t[2]) * (r.x - t[2]) + (r.y - t[3]) * (r.y - t[3]);
      }
      return s;
    };
    std::vector<double> g(p.size(), 0.0);
    for (const auto& t : pts) {
      for (int net = 0; net < 2; ++net) {
        SubNetTape<double> tape;
        const double o = subnet_forward(p.layout(), p.sub(net), t[0], t[1], tape);
        subnet_backward(p.layout(), p.sub(net), tape, 2.0 * (o - t[2 + net]),
                        std::span<double>(g).subspan(net * p.sub_size(), p.sub_size()));
      }
    }
    const std::vector<double> v(p.flat().begin(), p.flat().end());
    for (std::size_t k = 0; k < v.size(); k += 7) {
      const double fd = meshpinn::testing::fd_partial(loss, v, k);
      EXPECT_TRUE(close(g[k], fd, 1e-5, 1e-8)) << "k=" << k << " " << g[k] << " vs " << fd;
    }
  }
}

TEST(GenerateMesh, CornersAndSnap) {
  const auto p = random_params(2, 4, Architecture::gated, 1);
  const auto m = generate_mesh(p, 2, 2);
  EXPECT_EQ(m.size(), 4u);
  EXPECT_EQ(m(1, 1), forward(p, 1.0, 1.0));
  EXPECT_EQ(m(0, 1), forward(p, 0.0, 1.0));

  const auto fit = build_boundary_fit(meshpinn::testing::unit_square(33));
  const auto snapped = generate_mesh(p, 9, 9, true, &fit);
  for (int i = 0; i < 9; ++i) {
    EXPECT_EQ(snapped(i, 0).y, 0.0);
    EXPECT_EQ(snapped(i, 8).y, 1.0);
  }
  for (int j = 0; j < 9; ++j) {
    EXPECT_EQ(snapped(0, j).x, 0.0);
    EXPECT_EQ(snapped(8, j).x, 1.0);
  }
  EXPECT_EQ(snapped(4, 4), forward(p, 0.5, 0.5));
  EXPECT_THROW(generate_mesh(p, 3, 3, true, nullptr), InputError);
}
