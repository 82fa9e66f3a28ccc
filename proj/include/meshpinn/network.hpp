#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/jet.hpp"
#include "meshpinn/mesh.hpp"
#include "meshpinn/rng.hpp"

namespace meshpinn {

/// `gated` is the two-branch shortcut network; `plain` is a tanh MLP of the
/// same depth and width, used for ablations.
enum class Architecture { gated, plain };

constexpr std::string_view to_string(Architecture a) {
  return a == Architecture::gated ? "gated" : "plain";
}

inline constexpr int kDefaultLayers = 4;
inline constexpr int kDefaultNeurons = 30;

/// Offsets of every tensor of one sub-network inside its flat parameter
/// block. Matrices are row-major (output index major).
///
/// gated: W_b1 (H x 2), b_b1, W_b2 (H x 2), b_b2, W_1 (H x 2), b_1,
///        then for k = 1..L-1: W'_k (H x H), b'_k, then W_out (H), b_out.
/// plain: W_1 (H x 2), b_1, then for k = 1..L-1: W_k (H x H), b_k,
///        then W_out (H), b_out.
struct SubNetLayout {
  int layers = 0;
  int neurons = 0;
  Architecture arch = Architecture::gated;

  std::size_t branch1 = 0;  // W_b1, then b_b1 (gated only)
  std::size_t branch2 = 0;  // W_b2, then b_b2 (gated only)
  std::size_t input = 0;    // W_1, then b_1
  std::size_t hidden = 0;   // first W'_1; block k starts at hidden + (k-1)*(H*H+H)
  std::size_t out = 0;      // W_out, then b_out
  std::size_t size = 0;

  SubNetLayout(int L, int H, Architecture a) : layers(L), neurons(H), arch(a) {
    if (L < 1 || H < 1) throw InputError("network needs at least one layer and one neuron");
    const auto h = static_cast<std::size_t>(H);
    const std::size_t in_block = 2 * h + h;
    std::size_t at = 0;
    if (a == Architecture::gated) {
      branch1 = at;
      at += in_block;
      branch2 = at;
      at += in_block;
    }
    input = at;
    at += in_block;
    hidden = at;
    at += static_cast<std::size_t>(L - 1) * (h * h + h);
    out = at;
    at += h + 1;
    size = at;
  }

  std::size_t hidden_block(int k) const {
    const auto h = static_cast<std::size_t>(neurons);
    return hidden + static_cast<std::size_t>(k) * (h * h + h);
  }
};

/// Both sub-networks in one flat vector: x-net block first, then y-net.
class MeshNetParams {
 public:
  MeshNetParams(int layers, int neurons, Architecture arch = Architecture::gated)
      : layout_(layers, neurons, arch), values_(2 * layout_.size, 0.0) {}

  MeshNetParams(int layers, int neurons, Architecture arch, std::vector<double> values)
      : layout_(layers, neurons, arch), values_(std::move(values)) {
    if (values_.size() != 2 * layout_.size)
      throw InputError("parameter vector length does not match (L, H, architecture)");
  }

  int layers() const { return layout_.layers; }
  int neurons() const { return layout_.neurons; }
  Architecture architecture() const { return layout_.arch; }
  const SubNetLayout& layout() const { return layout_; }

  std::size_t size() const { return values_.size(); }
  std::size_t sub_size() const { return layout_.size; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  /// 0 selects the x-net, 1 the y-net.
  std::span<const double> sub(int which) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(which) * layout_.size,
                                                    layout_.size);
  }

  friend bool operator==(const MeshNetParams& a, const MeshNetParams& b) {
    return a.layout_.layers == b.layout_.layers && a.layout_.neurons == b.layout_.neurons &&
           a.layout_.arch == b.layout_.arch && a.values_ == b.values_;
  }

 private:
  SubNetLayout layout_;
  std::vector<double> values_;
};

/// Glorot-uniform weights, zero biases.
inline MeshNetParams init_params(int layers, int neurons, std::uint64_t seed,
                                 Architecture arch = Architecture::gated) {
  MeshNetParams params(layers, neurons, arch);
  const auto& lay = params.layout();
  const auto h = static_cast<std::size_t>(neurons);
  Rng rng(seed);
  auto glorot = [&](std::span<double> w, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-bound, bound);
  };
  for (int net = 0; net < 2; ++net) {
    auto block = params.flat().subspan(static_cast<std::size_t>(net) * lay.size, lay.size);
    if (arch == Architecture::gated) {
      glorot(block.subspan(lay.branch1, 2 * h), 2, h);
      glorot(block.subspan(lay.branch2, 2 * h), 2, h);
    }
    glorot(block.subspan(lay.input, 2 * h), 2, h);
    for (int k = 0; k < layers - 1; ++k) glorot(block.subspan(lay.hidden_block(k), h * h), h, h);
    glorot(block.subspan(lay.out, h), h, 1);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Sub-network evaluation with a reverse pass.
//
// The tape keeps every pre-activation and hidden state of one evaluation so
// `backward` can pull an output adjoint back onto the parameters. T is
// `double` for plain evaluation and `Jet2` when (xi, eta)-derivatives are
// needed.

template <class T>
struct SubNetTape {
  T in_xi{};
  T in_eta{};
  std::vector<T> pre_u, u, pre_w, w;  // gated only
  std::vector<T> pre_h;               // L * H pre-activations of h_1..h_L (only h_1 when gated)
  std::vector<T> pre_z, z;            // (L-1) * H gate pre-activations (gated only)
  std::vector<T> h;                   // L * H hidden states
  std::vector<T> diff;                // H values of w - u (gated only)
  T out{};

  // reverse-pass scratch
  std::vector<T> hbar, pbar, ubar, wbar;
};

namespace detail {

inline Jet2 input_var(Axis a, const Jet2*, double v) { return jet_var(a, v); }
inline double input_var(Axis, const double*, double v) { return v; }

/// pre[j] = W[j,0]*xi + W[j,1]*eta + b[j]
template <class T>
inline void input_affine(std::span<const double> p, std::size_t at, int H, const T& xi,
                         const T& eta, T* pre) {
  const double* W = p.data() + at;
  const double* b = W + 2 * H;
  for (int j = 0; j < H; ++j) {
    T acc = xi * W[2 * j];
    acc += eta * W[2 * j + 1];
    if constexpr (std::is_same_v<T, double>) {
      acc += b[j];
    } else {
      acc.v += b[j];
    }
    pre[j] = acc;
  }
}

template <class T>
inline void hidden_affine(std::span<const double> p, std::size_t at, int H, const T* hin, T* pre) {
  const double* W = p.data() + at;
  const double* b = W + static_cast<std::size_t>(H) * H;
  for (int j = 0; j < H; ++j) {
    const double* row = W + static_cast<std::size_t>(j) * H;
    T acc{};
    for (int i = 0; i < H; ++i) acc += hin[i] * row[i];
    if constexpr (std::is_same_v<T, double>) {
      acc += b[j];
    } else {
      acc.v += b[j];
    }
    pre[j] = acc;
  }
}

template <class T>
inline void input_affine_adjoint(std::span<const double> /*p*/, std::size_t at, int H,
                                 const T& xi, const T& eta, const T* pbar, std::span<double> g) {
  double* gW = g.data() + at;
  double* gb = gW + 2 * H;
  for (int j = 0; j < H; ++j) {
    gW[2 * j] += contract(pbar[j], xi);
    gW[2 * j + 1] += contract(pbar[j], eta);
    gb[j] += value_of(pbar[j]);
  }
}

/// Accumulates weight/bias adjoints and overwrites hbar with W^T * pbar.
template <class T>
inline void hidden_affine_adjoint(std::span<const double> p, std::size_t at, int H, const T* hin,
                                  const T* pbar, std::span<double> g, T* hbar) {
  const double* W = p.data() + at;
  double* gW = g.data() + at;
  double* gb = gW + static_cast<std::size_t>(H) * H;
  for (int i = 0; i < H; ++i) hbar[i] = T{};
  for (int j = 0; j < H; ++j) {
    const double* row = W + static_cast<std::size_t>(j) * H;
    double* grow = gW + static_cast<std::size_t>(j) * H;
    const T& pb = pbar[j];
    for (int i = 0; i < H; ++i) {
      grow[i] += contract(pb, hin[i]);
      hbar[i] += pb * row[i];
    }
    gb[j] += value_of(pb);
  }
}

}  // namespace detail

template <class T>
inline T subnet_forward(const SubNetLayout& lay, std::span<const double> p, double xi, double eta,
                        SubNetTape<T>& tape) {
  const int H = lay.neurons;
  const int L = lay.layers;
  const auto h = static_cast<std::size_t>(H);
  tape.in_xi = detail::input_var(Axis::xi, static_cast<const T*>(nullptr), xi);
  tape.in_eta = detail::input_var(Axis::eta, static_cast<const T*>(nullptr), eta);
  tape.h.resize(static_cast<std::size_t>(L) * h);
  tape.pre_h.resize(static_cast<std::size_t>(L) * h);

  detail::input_affine(p, lay.input, H, tape.in_xi, tape.in_eta, tape.pre_h.data());
  for (std::size_t j = 0; j < h; ++j) tape.h[j] = activation(tape.pre_h[j]);

  if (lay.arch == Architecture::gated) {
    tape.pre_u.resize(h);
    tape.u.resize(h);
    tape.pre_w.resize(h);
    tape.w.resize(h);
    tape.pre_z.resize(static_cast<std::size_t>(L - 1) * h);
    tape.z.resize(static_cast<std::size_t>(L - 1) * h);
    tape.diff.resize(h);
    detail::input_affine(p, lay.branch1, H, tape.in_xi, tape.in_eta, tape.pre_u.data());
    detail::input_affine(p, lay.branch2, H, tape.in_xi, tape.in_eta, tape.pre_w.data());
    for (std::size_t j = 0; j < h; ++j) {
      tape.u[j] = activation(tape.pre_u[j]);
      tape.w[j] = activation(tape.pre_w[j]);
      tape.diff[j] = tape.w[j] - tape.u[j];
    }
    for (int k = 0; k < L - 1; ++k) {
      T* pre = tape.pre_z.data() + static_cast<std::size_t>(k) * h;
      T* z = tape.z.data() + static_cast<std::size_t>(k) * h;
      const T* hk = tape.h.data() + static_cast<std::size_t>(k) * h;
      T* hn = tape.h.data() + static_cast<std::size_t>(k + 1) * h;
      detail::hidden_affine(p, lay.hidden_block(k), H, hk, pre);
      for (std::size_t j = 0; j < h; ++j) {
        z[j] = activation(pre[j]);
        // h_{k+1} = (1 - z) u + z w, evaluated as u + z (w - u)
        hn[j] = tape.u[j] + z[j] * tape.diff[j];
      }
    }
  } else {
    for (int k = 0; k < L - 1; ++k) {
      T* pre = tape.pre_h.data() + static_cast<std::size_t>(k + 1) * h;
      const T* hk = tape.h.data() + static_cast<std::size_t>(k) * h;
      T* hn = tape.h.data() + static_cast<std::size_t>(k + 1) * h;
      detail::hidden_affine(p, lay.hidden_block(k), H, hk, pre);
      for (std::size_t j = 0; j < h; ++j) hn[j] = activation(pre[j]);
    }
  }

  const T* hl = tape.h.data() + static_cast<std::size_t>(L - 1) * h;
  const double* Wout = p.data() + lay.out;
  T acc{};
  for (std::size_t i = 0; i < h; ++i) acc += hl[i] * Wout[i];
  if constexpr (std::is_same_v<T, double>) {
    acc += Wout[h];
  } else {
    acc.v += Wout[h];
  }
  tape.out = acc;
  return acc;
}

/// Adds d(out)/d(params) contracted with `out_bar` into `grad` (length lay.size).
template <class T>
inline void subnet_backward(const SubNetLayout& lay, std::span<const double> p, SubNetTape<T>& tape,
                            const T& out_bar, std::span<double> grad) {
  const int H = lay.neurons;
  const int L = lay.layers;
  const auto h = static_cast<std::size_t>(H);
  tape.hbar.resize(h);
  tape.pbar.resize(h);

  const T* hl = tape.h.data() + static_cast<std::size_t>(L - 1) * h;
  const double* Wout = p.data() + lay.out;
  double* gout = grad.data() + lay.out;
  for (std::size_t i = 0; i < h; ++i) {
    gout[i] += contract(out_bar, hl[i]);
    tape.hbar[i] = out_bar * Wout[i];
  }
  gout[h] += value_of(out_bar);

  if (lay.arch == Architecture::gated) {
    tape.ubar.assign(h, T{});
    tape.wbar.assign(h, T{});
    for (int k = L - 2; k >= 0; --k) {
      const T* pre = tape.pre_z.data() + static_cast<std::size_t>(k) * h;
      const T* z = tape.z.data() + static_cast<std::size_t>(k) * h;
      const T* hk = tape.h.data() + static_cast<std::size_t>(k) * h;
      for (std::size_t j = 0; j < h; ++j) {
        const T& hb = tape.hbar[j];
        const T zbar = mul_adjoint(z[j], tape.diff[j], hb);
        const T dbar = mul_adjoint(tape.diff[j], z[j], hb);
        tape.ubar[j] += hb - dbar;
        tape.wbar[j] += dbar;
        tape.pbar[j] = activation_adjoint(pre[j], zbar);
      }
      detail::hidden_affine_adjoint(p, lay.hidden_block(k), H, hk, tape.pbar.data(), grad,
                                    tape.hbar.data());
    }
    for (std::size_t j = 0; j < h; ++j) tape.pbar[j] = activation_adjoint(tape.pre_h[j], tape.hbar[j]);
    detail::input_affine_adjoint(p, lay.input, H, tape.in_xi, tape.in_eta, tape.pbar.data(), grad);
    for (std::size_t j = 0; j < h; ++j) tape.pbar[j] = activation_adjoint(tape.pre_u[j], tape.ubar[j]);
    detail::input_affine_adjoint(p, lay.branch1, H, tape.in_xi, tape.in_eta, tape.pbar.data(), grad);
    for (std::size_t j = 0; j < h; ++j) tape.pbar[j] = activation_adjoint(tape.pre_w[j], tape.wbar[j]);
    detail::input_affine_adjoint(p, lay.branch2, H, tape.in_xi, tape.in_eta, tape.pbar.data(), grad);
  } else {
    for (int k = L - 2; k >= 0; --k) {
      const T* pre = tape.pre_h.data() + static_cast<std::size_t>(k + 1) * h;
      const T* hk = tape.h.data() + static_cast<std::size_t>(k) * h;
      for (std::size_t j = 0; j < h; ++j) tape.pbar[j] = activation_adjoint(pre[j], tape.hbar[j]);
      detail::hidden_affine_adjoint(p, lay.hidden_block(k), H, hk, tape.pbar.data(), grad,
                                    tape.hbar.data());
    }
    for (std::size_t j = 0; j < h; ++j) tape.pbar[j] = activation_adjoint(tape.pre_h[j], tape.hbar[j]);
    detail::input_affine_adjoint(p, lay.input, H, tape.in_xi, tape.in_eta, tape.pbar.data(), grad);
  }
}

// ---------------------------------------------------------------------------
// Public evaluation

template <class T>
struct MeshNetTape {
  SubNetTape<T> x;
  SubNetTape<T> y;
};

inline Vec2 forward(const MeshNetParams& params, double xi, double eta) {
  SubNetTape<double> tape;
  const double x = subnet_forward(params.layout(), params.sub(0), xi, eta, tape);
  const double y = subnet_forward(params.layout(), params.sub(1), xi, eta, tape);
  return {x, y};
}

inline std::pair<Jet2, Jet2> forward_jet(const MeshNetParams& params, double xi, double eta) {
  SubNetTape<Jet2> tape;
  const Jet2 x = subnet_forward(params.layout(), params.sub(0), xi, eta, tape);
  const Jet2 y = subnet_forward(params.layout(), params.sub(1), xi, eta, tape);
  return {x, y};
}

/// Evaluates the network on the uniform computational grid. With
/// `snap_boundary`, the border rows and columns are replaced by the boundary
/// fit (left/right columns first, then bottom/top rows).
inline StructuredMesh generate_mesh(const MeshNetParams& params, int ni, int nj,
                                    bool snap_boundary = false,
                                    const BoundaryFit* fit = nullptr) {
  StructuredMesh mesh(ni, nj);
  SubNetTape<double> tape;
  for (int j = 0; j < nj; ++j) {
    const double eta = grid_coord(j, nj);
    for (int i = 0; i < ni; ++i) {
      const double xi = grid_coord(i, ni);
      const double x = subnet_forward(params.layout(), params.sub(0), xi, eta, tape);
      const double y = subnet_forward(params.layout(), params.sub(1), xi, eta, tape);
      mesh(i, j) = {x, y};
    }
  }
  if (snap_boundary) {
    if (fit == nullptr) throw InputError("snap_boundary requires a boundary fit");
    for (int j = 0; j < nj; ++j) {
      const double eta = grid_coord(j, nj);
      mesh(0, j) = fit->side(Side::left)(eta);
      mesh(ni - 1, j) = fit->side(Side::right)(eta);
    }
    for (int i = 0; i < ni; ++i) {
      const double xi = grid_coord(i, ni);
      mesh(i, 0) = fit->side(Side::bottom)(xi);
      mesh(i, nj - 1) = fit->side(Side::top)(xi);
    }
  }
  return mesh;
}

}  // namespace meshpinn
