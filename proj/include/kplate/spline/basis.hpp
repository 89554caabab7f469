#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include <Eigen/Dense>

#include "kplate/spline/knot_vector.hpp"

namespace kplate {

/// Nonzero basis functions at a point: `ders(k, j)` is the k-th derivative of
/// function `first + j`.
template <typename Scalar = double>
struct BasisValues {
  int first = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ders;

  int count() const { return static_cast<int>(ders.cols()); }
};

template <typename Scalar = double>
class SplineSpace {
 public:
  SplineSpace() = default;
  explicit SplineSpace(KnotVector<Scalar> kv) : kv_(std::move(kv)) {}

  const KnotVector<Scalar>& knot_vector() const { return kv_; }
  int degree() const { return kv_.degree(); }
  int dimension() const { return kv_.dimension(); }
  Scalar front() const { return kv_.front(); }
  Scalar back() const { return kv_.back(); }

  /// Cox-de Boor values with the Piegl-Tiller derivative recursion.
  /// Rows above the degree are returned as zeros.
  BasisValues<Scalar> eval(Scalar xi, int max_deriv) const {
    const Scalar tol = Scalar(1e-12) * (kv_.back() - kv_.front());
    if (xi < kv_.front() - tol || xi > kv_.back() + tol)
      throw Error(ErrorKind::Domain, "eval_basis: point outside the parametric interval");
    xi = std::clamp(xi, kv_.front(), kv_.back());

    const int p = kv_.degree();
    const auto& U = kv_.knots();
    const int span = kv_.find_span(xi);
    const int nd = std::min(max_deriv, p);

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ndu(p + 1, p + 1);
    std::vector<Scalar> left(p + 1), right(p + 1);
    ndu(0, 0) = 1;
    for (int j = 1; j <= p; ++j) {
      left[j] = xi - U[span + 1 - j];
      right[j] = U[span + j] - xi;
      Scalar saved = 0;
      for (int r = 0; r < j; ++r) {
        ndu(j, r) = right[r + 1] + left[j - r];
        const Scalar temp = ndu(r, j - 1) / ndu(j, r);
        ndu(r, j) = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      ndu(j, j) = saved;
    }

    BasisValues<Scalar> out;
    out.first = span - p;
    out.ders = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(max_deriv + 1, p + 1);
    for (int j = 0; j <= p; ++j) out.ders(0, j) = ndu(j, p);

    Eigen::Matrix<Scalar, 2, Eigen::Dynamic> a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
      int s1 = 0, s2 = 1;
      a.setZero();
      a(0, 0) = 1;
      for (int k = 1; k <= nd; ++k) {
        Scalar d = 0;
        const int rk = r - k, pk = p - k;
        if (r >= k) {
          a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
          d = a(s2, 0) * ndu(rk, pk);
        }
        const int j1 = (rk >= -1) ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
        for (int j = j1; j <= j2; ++j) {
          a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
          d += a(s2, j) * ndu(rk + j, pk);
        }
        if (r <= pk) {
          a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
          d += a(s2, k) * ndu(r, pk);
        }
        out.ders(k, r) = d;
        std::swap(s1, s2);
      }
    }
    Scalar factor = p;
    for (int k = 1; k <= nd; ++k) {
      out.ders.row(k) *= factor;
      factor *= Scalar(p - k);
    }
    return out;
  }

  /// Nonempty knot spans as (a, b) pairs.
  std::vector<std::array<Scalar, 2>> elements() const {
    const auto b = kv_.breakpoints();
    std::vector<std::array<Scalar, 2>> e;
    for (std::size_t i = 0; i + 1 < b.size(); ++i) e.push_back({b[i], b[i + 1]});
    return e;
  }

 private:
  KnotVector<Scalar> kv_;
};

template <typename Scalar>
BasisValues<Scalar> eval_basis(const SplineSpace<Scalar>& space, Scalar xi, int max_deriv) {
  return space.eval(xi, max_deriv);
}

/// Tensor product of two univariate spaces; dof index = i1 + n1 * i2.
template <typename Scalar = double>
class TensorSpace {
 public:
  TensorSpace() = default;
  TensorSpace(SplineSpace<Scalar> s1, SplineSpace<Scalar> s2) : spaces_{std::move(s1), std::move(s2)} {}

  const SplineSpace<Scalar>& operator[](int dir) const { return spaces_[dir]; }
  int degree() const { return spaces_[0].degree(); }
  int size(int dir) const { return spaces_[dir].dimension(); }
  int dimension() const { return size(0) * size(1); }
  int index(int i1, int i2) const { return i1 + size(0) * i2; }
  std::array<int, 2> multi_index(int idx) const { return {idx % size(0), idx / size(0)}; }

 private:
  std::array<SplineSpace<Scalar>, 2> spaces_;
};

}  // namespace kplate
