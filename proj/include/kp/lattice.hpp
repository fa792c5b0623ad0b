#ifndef KP_LATTICE_HPP
#define KP_LATTICE_HPP

#include "kp/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kp {

/// One spectral mode: a frequency vector xi and its quadrature weight.
template <typename Scalar>
struct Mode {
  Eigen::VectorX<Scalar> xi;
  Scalar weight = Scalar(1);
};

/// Bounds accepted by make_torus_lattice.
struct TorusLimits {
  int max_dim = 3;
  int max_index = 64;
};

/// Finite set of modes with a quadrature rule, discretizing the spectral
/// integrals as weighted sums.  Ordering is fixed at construction and is
/// part of the determinism contract; immutable afterwards.
template <typename Scalar>
class ModeLattice {
public:
  ModeLattice(int dim, std::vector<Mode<Scalar>> modes, std::string label)
      : dim_(dim), modes_(std::move(modes)), label_(std::move(label)) {
    if (dim_ < 1) throw std::invalid_argument("lattice: dim must be >= 1");
    if (modes_.empty()) throw std::invalid_argument("lattice: no modes");
    const Eigen::Index n = static_cast<Eigen::Index>(modes_.size());
    weight_.resize(n);
    xi_sq_.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Mode<Scalar>& m = modes_[static_cast<std::size_t>(k)];
      if (m.xi.size() != dim_)
        throw std::invalid_argument("lattice: mode dimension mismatch");
      if (!(m.weight > Scalar(0)))
        throw std::invalid_argument("lattice: weights must be positive");
      weight_[k] = m.weight;
      xi_sq_[k] = m.xi.squaredNorm();
    }
    check_distinct();
    // weight * |xi|^(2m), m = 0..3, used by every spectral reduction
    for (int m = 0; m < 4; ++m) {
      wxi_[m] = (m == 0) ? weight_ : RealArray<Scalar>(wxi_[m - 1] * xi_sq_);
    }
  }

  int dim() const { return dim_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(modes_.size()); }
  const std::string& label() const { return label_; }
  const Mode<Scalar>& mode(Eigen::Index k) const {
    return modes_[static_cast<std::size_t>(k)];
  }
  const std::vector<Mode<Scalar>>& modes() const { return modes_; }

  const RealArray<Scalar>& weights() const { return weight_; }
  const RealArray<Scalar>& xi_sq() const { return xi_sq_; }
  /// weight * |xi|^(2m) per mode, m in 0..3.
  const RealArray<Scalar>& weighted_xi_pow(int m) const { return wxi_[m]; }

  /// Quadrature: sum_k weight_k * f_k, in fixed mode order.
  template <typename Derived>
  Scalar reduce(const Eigen::ArrayBase<Derived>& f) const {
    return (weight_ * f).sum();
  }

private:
  void check_distinct() const {
    std::vector<std::size_t> idx(modes_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto lex_less = [this](std::size_t a, std::size_t b) {
      const auto& xa = modes_[a].xi;
      const auto& xb = modes_[b].xi;
      for (int d = 0; d < dim_; ++d) {
        if (xa[d] < xb[d]) return true;
        if (xa[d] > xb[d]) return false;
      }
      return false;
    };
    std::sort(idx.begin(), idx.end(), lex_less);
    for (std::size_t i = 1; i < idx.size(); ++i) {
      if (modes_[idx[i - 1]].xi == modes_[idx[i]].xi)
        throw std::invalid_argument("lattice: duplicate mode frequency");
    }
  }

  int dim_;
  std::vector<Mode<Scalar>> modes_;
  std::string label_;
  RealArray<Scalar> weight_;
  RealArray<Scalar> xi_sq_;
  RealArray<Scalar> wxi_[4];
};

/// Dual lattice of the torus: integer frequencies in [-max_index, max_index]^dim,
/// unit weights, lexicographic order.
template <typename Scalar = double>
ModeLattice<Scalar> make_torus_lattice(int dim, int max_index,
                                       TorusLimits limits = {}) {
  if (dim < 1 || dim > limits.max_dim)
    throw std::invalid_argument("make_torus_lattice: dim out of bounds [1," +
                                std::to_string(limits.max_dim) + "]");
  if (max_index < 1 || max_index > limits.max_index)
    throw std::invalid_argument(
        "make_torus_lattice: max_index out of bounds [1," +
        std::to_string(limits.max_index) + "]");

  const int side = 2 * max_index + 1;
  std::size_t count = 1;
  for (int d = 0; d < dim; ++d) count *= static_cast<std::size_t>(side);

  std::vector<Mode<Scalar>> modes;
  modes.reserve(count);
  std::vector<int> index(static_cast<std::size_t>(dim), -max_index);
  for (std::size_t k = 0; k < count; ++k) {
    Mode<Scalar> m;
    m.xi.resize(dim);
    for (int d = 0; d < dim; ++d) m.xi[d] = Scalar(index[static_cast<std::size_t>(d)]);
    m.weight = Scalar(1);
    modes.push_back(std::move(m));
    // odometer increment, last coordinate fastest (lexicographic order)
    for (int d = dim - 1; d >= 0; --d) {
      if (++index[static_cast<std::size_t>(d)] <= max_index) break;
      index[static_cast<std::size_t>(d)] = -max_index;
    }
  }
  return ModeLattice<Scalar>(dim, std::move(modes),
                             "torus:" + std::to_string(dim) + "d:n" +
                                 std::to_string(max_index));
}

/// Lattice from an explicit (xi, weight) list, order preserved.
template <typename Scalar = double>
ModeLattice<Scalar> make_custom_lattice(int dim,
                                        std::vector<Mode<Scalar>> entries,
                                        std::string label = "custom") {
  return ModeLattice<Scalar>(dim, std::move(entries), std::move(label));
}

/// 1-D helper used throughout the tests: modes at scalar frequencies.
template <typename Scalar = double>
ModeLattice<Scalar> make_line_lattice(std::vector<Scalar> frequencies,
                                      std::vector<Scalar> weights = {}) {
  std::vector<Mode<Scalar>> entries;
  entries.reserve(frequencies.size());
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    Mode<Scalar> m;
    m.xi.resize(1);
    m.xi[0] = frequencies[i];
    m.weight = weights.empty() ? Scalar(1) : weights.at(i);
    entries.push_back(std::move(m));
  }
  return make_custom_lattice<Scalar>(1, std::move(entries), "line");
}

using ModeLatticed = ModeLattice<double>;

} // namespace kp

#endif // KP_LATTICE_HPP
