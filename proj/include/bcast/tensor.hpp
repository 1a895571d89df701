#pragma once

// Dense N-dimensional tensors with column-major storage and the shape
// algebra of the broadcast product.
//
// Modes are 0-based in the C++ API. Error messages report them 1-based,
// which is the convention of the mathematical notation the library follows
// (element x_{i1 i2 ... iN}, mode n in {1..N}).
//
// Storage is column-major: element (i_1, ..., i_N) lives at
//   i_1 + I_1*(i_2 - 1) + I_1*I_2*(i_3 - 1) + ...   (1-based indices)
// so the first mode varies fastest. This matches the Kolda-Bader unfolding
// convention used by unfold()/fold().

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcast/error.hpp"

namespace bcast {

/// Ordered list of positive mode lengths.
///
/// An empty dimension list is the order-0 scalar and is stored as (1).
/// Shapes that differ only by trailing ones describe the same space; see
/// equivalent() and normalize_orders().
class Shape {
 public:
  Shape() : dims_{1} {}
  Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) dims_.push_back(1);
    for (std::size_t n = 0; n < dims_.size(); ++n) {
      if (dims_[n] == 0) {
        throw shape_error("shape: mode " + std::to_string(n + 1) + " has length 0");
      }
    }
  }

  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t n) const { return dims_[n]; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  std::size_t numel() const noexcept {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
  }

  /// Appends trailing ones up to `order`. Never changes existing modes.
  Shape padded(std::size_t order) const {
    std::vector<std::size_t> d = dims_;
    if (d.size() < order) d.resize(order, 1);
    return Shape(std::move(d));
  }

  /// Drops trailing ones, keeping at least one mode.
  Shape trimmed() const {
    std::vector<std::size_t> d = dims_;
    while (d.size() > 1 && d.back() == 1) d.pop_back();
    return Shape(std::move(d));
  }

  std::string str() const {
    std::string s;
    for (std::size_t n = 0; n < dims_.size(); ++n) {
      if (n) s += 'x';
      s += std::to_string(dims_[n]);
    }
    return s;
  }

  bool operator==(const Shape&) const = default;

 private:
  std::vector<std::size_t> dims_;
};

/// True when the shapes agree after padding the shorter with trailing ones.
inline bool equivalent(const Shape& a, const Shape& b) {
  return a.trimmed() == b.trimmed();
}

/// Pads the lower-order shape with trailing ones so both have the same order.
inline std::pair<Shape, Shape> normalize_orders(const Shape& a, const Shape& b) {
  const std::size_t n = std::max(a.order(), b.order());
  return {a.padded(n), b.padded(n)};
}

/// The broadcast condition: after trailing-ones padding, every mode has equal
/// lengths or a length of one on either side.
inline bool broadcast_compatible(const Shape& a, const Shape& b) {
  auto [pa, pb] = normalize_orders(a, b);
  for (std::size_t n = 0; n < pa.order(); ++n) {
    if (pa[n] != pb[n] && pa[n] != 1 && pb[n] != 1) return false;
  }
  return true;
}

/// Per-mode maximum of two compatible shapes.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  auto [pa, pb] = normalize_orders(a, b);
  std::vector<std::size_t> out(pa.order());
  for (std::size_t n = 0; n < pa.order(); ++n) {
    if (pa[n] != pb[n] && pa[n] != 1 && pb[n] != 1) {
      throw broadcast_error("broadcast: shapes " + a.str() + " and " + b.str() +
                            " disagree at mode " + std::to_string(n + 1) + " (" +
                            std::to_string(pa[n]) + " vs " + std::to_string(pb[n]) + ")");
    }
    out[n] = std::max(pa[n], pb[n]);
  }
  return Shape(std::move(out));
}

/// Dense real tensor: a shape plus a column-major buffer of numel() doubles.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}

  Tensor(Shape shape, std::vector<double> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_.numel()) {
      throw shape_error("tensor: shape " + shape_.str() + " needs " +
                        std::to_string(shape_.numel()) + " values, got " +
                        std::to_string(data_.size()));
    }
  }

  static Tensor filled(Shape shape, double value) {
    const std::size_t n = shape.numel();
    return Tensor(std::move(shape), std::vector<double>(n, value));
  }
  static Tensor zeros(Shape shape) { return filled(std::move(shape), 0.0); }
  static Tensor scalar(double value) { return Tensor(Shape{1}, {value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.order(); }
  std::size_t numel() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t n) const { return n < shape_.order() ? shape_[n] : 1; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t linear) const { return data_[linear]; }
  double& operator[](std::size_t linear) { return data_[linear]; }

  /// 0-based multi-index access. Missing trailing indices are taken as 0;
  /// extra indices must be 0 (trailing length-one modes).
  template <class... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <class... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    std::size_t lin = 0;
    std::size_t stride = 1;
    std::size_t n = 0;
    for (std::size_t i : idx) {
      const std::size_t len = dim(n);
      if (i >= len) {
        throw shape_error("tensor: index " + std::to_string(i + 1) + " out of range for mode " +
                          std::to_string(n + 1) + " of shape " + shape_.str());
      }
      lin += i * stride;
      stride *= len;
      ++n;
    }
    return lin;
  }

  /// Same buffer under a new shape with the same element count.
  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return equivalent(a.shape_, b.shape_) && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline Tensor make_tensor(Shape shape, std::vector<double> values) {
  return Tensor(std::move(shape), std::move(values));
}

namespace detail {

inline std::vector<std::size_t> column_major_strides(const Shape& s) {
  std::vector<std::size_t> st(s.order());
  std::size_t acc = 1;
  for (std::size_t n = 0; n < s.order(); ++n) {
    st[n] = acc;
    acc *= s[n];
  }
  return st;
}

/// Strides of a buffer of shape `src` read over the index space `space`.
/// Modes where `src` has length one get stride 0 (replication / reduction).
inline std::vector<std::size_t> view_strides(const Shape& src, const Shape& space) {
  const Shape p = src.padded(space.order());
  std::vector<std::size_t> st = column_major_strides(p);
  for (std::size_t n = 0; n < space.order(); ++n) {
    if (p[n] == 1) st[n] = 0;
  }
  return st;
}

/// Walks `space` in column-major order and calls f(linear, offset_a, offset_b),
/// where the offsets advance by the given per-mode strides.
template <class F>
void strided_walk(const Shape& space, std::span<const std::size_t> sa,
                  std::span<const std::size_t> sb, F&& f) {
  const std::size_t order = space.order();
  const std::size_t total = space.numel();
  const std::size_t inner = space[0];
  std::vector<std::size_t> idx(order, 0);
  std::size_t a = 0;
  std::size_t b = 0;
  for (std::size_t lin = 0; lin < total; lin += inner) {
    for (std::size_t i = 0; i < inner; ++i) f(lin + i, a + i * sa[0], b + i * sb[0]);
    for (std::size_t m = 1; m < order; ++m) {
      a += sa[m];
      b += sb[m];
      if (++idx[m] < space[m]) break;
      a -= sa[m] * space[m];
      b -= sb[m] * space[m];
      idx[m] = 0;
    }
  }
}

inline void check_mode(std::size_t mode, std::size_t order, const char* what) {
  if (mode >= order) {
    throw shape_error(std::string(what) + ": mode " + std::to_string(mode + 1) +
                      " out of range for order " + std::to_string(order));
  }
}

}  // namespace detail

/// Replicates `x` along every mode where it has length one and `target` does
/// not. The result has the per-mode maximum shape.
inline Tensor bc(const Tensor& x, const Shape& target) {
  const Shape out = broadcast_shape(x.shape(), target);
  if (equivalent(out, x.shape())) return x.reshaped(out);
  const auto sx = detail::view_strides(x.shape(), out);
  std::vector<double> v(out.numel());
  const auto src = x.data();
  detail::strided_walk(out, sx, sx, [&](std::size_t lin, std::size_t a, std::size_t) {
    v[lin] = src[a];
  });
  return Tensor(out, std::move(v));
}

inline bool is_permutation(std::span<const std::size_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

inline std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
  if (!is_permutation(perm)) throw shape_error("permute: not a permutation");
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) inv[perm[p]] = p;
  return inv;
}

/// Output mode p holds input mode perm[p].
inline Tensor permute(const Tensor& x, std::span<const std::size_t> perm) {
  if (perm.size() != x.order() || !is_permutation(perm)) {
    throw shape_error("permute: ordering of " + std::to_string(perm.size()) +
                      " modes is not a permutation of the " + std::to_string(x.order()) +
                      " modes of " + x.shape().str());
  }
  std::vector<std::size_t> dims(perm.size());
  const auto in_strides = detail::column_major_strides(x.shape());
  std::vector<std::size_t> st(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    dims[p] = x.shape()[perm[p]];
    st[p] = in_strides[perm[p]];
  }
  Shape out(std::move(dims));
  std::vector<double> v(out.numel());
  const auto src = x.data();
  detail::strided_walk(out, st, st, [&](std::size_t lin, std::size_t a, std::size_t) {
    v[lin] = src[a];
  });
  return Tensor(std::move(out), std::move(v));
}

inline Tensor permute(const Tensor& x, std::initializer_list<std::size_t> perm) {
  return permute(x, std::span<const std::size_t>(perm.begin(), perm.size()));
}

/// Mode-n matricization: shape (I_n, prod_{m != n} I_m), remaining modes in
/// increasing order with the lowest varying fastest.
inline Tensor unfold(const Tensor& x, std::size_t mode) {
  detail::check_mode(mode, x.order(), "unfold");
  std::vector<std::size_t> perm{mode};
  for (std::size_t m = 0; m < x.order(); ++m) {
    if (m != mode) perm.push_back(m);
  }
  const std::size_t rows = x.shape()[mode];
  return permute(x, perm).reshaped(Shape{rows, x.numel() / rows});
}

/// Inverse of unfold(): rebuilds a tensor of shape `target` from its mode-n
/// matricization.
inline Tensor fold(const Tensor& m, std::size_t mode, const Shape& target) {
  detail::check_mode(mode, target.order(), "fold");
  const std::size_t rows = target[mode];
  const Shape expect{rows, target.numel() / rows};
  if (!equivalent(m.shape(), expect)) {
    throw shape_error("fold: matrix " + m.shape().str() + " does not match mode " +
                      std::to_string(mode + 1) + " unfolding " + expect.str() + " of " +
                      target.str());
  }
  std::vector<std::size_t> perm{mode};
  std::vector<std::size_t> dims{rows};
  for (std::size_t n = 0; n < target.order(); ++n) {
    if (n != mode) {
      perm.push_back(n);
      dims.push_back(target[n]);
    }
  }
  const Tensor permuted(Shape(std::move(dims)), m.values());
  return permute(permuted, inverse_permutation(perm));
}

/// Collapses consecutive runs of modes into single modes. `groups` must list
/// every mode exactly once, in order, e.g. {{0,1},{2,3},{4,5}}. Each group
/// becomes one mode whose length is the product of its members; since
/// storage is column-major this only relabels the shape.
inline Tensor reshape_group(const Tensor& x, const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<std::size_t> dims;
  std::size_t next = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw shape_error("reshape_group: empty group");
    std::size_t len = 1;
    for (std::size_t m : g) {
      if (m != next) {
        throw shape_error("reshape_group: expected mode " + std::to_string(next + 1) +
                          ", got mode " + std::to_string(m + 1));
      }
      len *= x.dim(m);
      ++next;
    }
    dims.push_back(len);
  }
  if (next != x.order()) {
    throw shape_error("reshape_group: groups cover " + std::to_string(next) + " of " +
                      std::to_string(x.order()) + " modes");
  }
  return x.reshaped(Shape(std::move(dims)));
}

}  // namespace bcast
