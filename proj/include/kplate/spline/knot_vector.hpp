#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "kplate/error.hpp"

namespace kplate {

/// Open (clamped) knot vector of maximal smoothness: end knots repeated
/// degree+1 times, interior knots simple.
template <typename Scalar = double>
class KnotVector {
 public:
  KnotVector() = default;

  KnotVector(std::vector<Scalar> knots, int degree) : knots_(std::move(knots)), degree_(degree) { validate(); }

  /// [a,...,a, interior breaks..., b,...,b] for the given breakpoints (including a and b).
  static KnotVector from_breakpoints(int degree, const std::vector<Scalar>& breaks) {
    if (breaks.size() < 2) throw Error(ErrorKind::Knots, "knot vector needs at least two breakpoints");
    std::vector<Scalar> k(degree + 1, breaks.front());
    k.insert(k.end(), breaks.begin() + 1, breaks.end() - 1);
    k.insert(k.end(), degree + 1, breaks.back());
    return KnotVector(std::move(k), degree);
  }

  static KnotVector uniform(int degree, int elements, Scalar a = 0, Scalar b = 1) {
    if (elements < 1) throw Error(ErrorKind::Knots, "uniform knot vector needs at least one element");
    std::vector<Scalar> breaks(elements + 1);
    for (int i = 0; i <= elements; ++i) breaks[i] = a + (b - a) * Scalar(i) / Scalar(elements);
    breaks.back() = b;
    return from_breakpoints(degree, breaks);
  }

  int degree() const { return degree_; }
  const std::vector<Scalar>& knots() const { return knots_; }
  int size() const { return static_cast<int>(knots_.size()); }
  int dimension() const { return size() - degree_ - 1; }
  Scalar front() const { return knots_.front(); }
  Scalar back() const { return knots_.back(); }
  Scalar operator[](int i) const { return knots_[i]; }

  /// Distinct knot values, ascending.
  std::vector<Scalar> breakpoints() const {
    std::vector<Scalar> b;
    for (Scalar k : knots_)
      if (b.empty() || k > b.back()) b.push_back(k);
    return b;
  }

  int element_count() const { return static_cast<int>(breakpoints().size()) - 1; }

  /// Largest knot span length.
  Scalar max_span() const {
    Scalar h = 0;
    for (int i = 0; i + 1 < size(); ++i) h = std::max(h, knots_[i + 1] - knots_[i]);
    return h;
  }

  /// Index i of the knot span [u_i, u_{i+1}) containing xi, p <= i <= n-1.
  /// The right end point belongs to the last nonempty span.
  int find_span(Scalar xi) const {
    const int n = dimension() - 1;
    if (xi >= knots_[n + 1]) return n;
    if (xi <= knots_[degree_]) return degree_;
    int low = degree_, high = n + 1;
    int mid = (low + high) / 2;
    while (xi < knots_[mid] || xi >= knots_[mid + 1]) {
      if (xi < knots_[mid])
        high = mid;
      else
        low = mid;
      mid = (low + high) / 2;
    }
    return mid;
  }

  bool operator==(const KnotVector& o) const { return degree_ == o.degree_ && knots_ == o.knots_; }

 private:
  void validate() const {
    auto fail = [&](const std::string& why) {
      std::ostringstream os;
      os << "invalid knot vector (degree " << degree_ << "): " << why;
      throw Error(ErrorKind::Knots, os.str());
    };
    if (degree_ < 0) fail("negative degree");
    const int p = degree_;
    if (size() < 2 * (p + 1)) fail("too few knots");
    for (int i = 0; i + 1 < size(); ++i)
      if (!(knots_[i] <= knots_[i + 1])) fail("sequence is not non-decreasing");
    if (!(knots_.front() < knots_.back())) fail("empty parametric interval");
    for (int i = 1; i <= p; ++i)
      if (knots_[i] != knots_[0] || knots_[size() - 1 - i] != knots_.back()) fail("not open: end knots must repeat degree+1 times");
    if (knots_[p + 1] == knots_[0] || knots_[size() - p - 2] == knots_.back()) fail("end knot multiplicity exceeds degree+1");
    for (int i = p + 1; i + 1 < size() - p - 1; ++i)
      if (knots_[i] == knots_[i + 1]) fail("interior knot multiplicity above 1");
  }

  std::vector<Scalar> knots_;
  int degree_ = 0;
};

/// Knot vector of degree p-2 obtained by dropping the first two and last two knots.
template <typename Scalar>
KnotVector<Scalar> reduce_knot_vector(const KnotVector<Scalar>& kv) {
  if (kv.degree() < 2) throw Error(ErrorKind::UnsupportedDegree, "reduce_knot_vector requires degree >= 2");
  const auto& k = kv.knots();
  return KnotVector<Scalar>(std::vector<Scalar>(k.begin() + 2, k.end() - 2), kv.degree() - 2);
}

/// Variant used by the stability tests: the first and last interior knots are
/// removed as well before the reduction.
template <typename Scalar>
KnotVector<Scalar> reduce_knot_vector_stability(const KnotVector<Scalar>& kv) {
  if (kv.degree() < 2) throw Error(ErrorKind::UnsupportedDegree, "reduce_knot_vector requires degree >= 2");
  const auto b = kv.breakpoints();
  if (b.size() < 4) throw Error(ErrorKind::Knots, "stability reduction needs at least two interior knots");
  std::vector<Scalar> breaks;
  breaks.push_back(b.front());
  breaks.insert(breaks.end(), b.begin() + 2, b.end() - 2);
  breaks.push_back(b.back());
  return reduce_knot_vector(KnotVector<Scalar>::from_breakpoints(kv.degree(), breaks));
}

/// Bisect every nonempty span `levels` times.
template <typename Scalar>
KnotVector<Scalar> refine_uniform(const KnotVector<Scalar>& kv, int levels) {
  if (levels < 0) throw Error(ErrorKind::Parameter, "refine_uniform: negative level count");
  auto breaks = kv.breakpoints();
  for (int l = 0; l < levels; ++l) {
    std::vector<Scalar> fine;
    fine.reserve(2 * breaks.size());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      fine.push_back(breaks[i]);
      fine.push_back((breaks[i] + breaks[i + 1]) / 2);
    }
    fine.push_back(breaks.back());
    breaks = std::move(fine);
  }
  return KnotVector<Scalar>::from_breakpoints(kv.degree(), breaks);
}

/// Open knot vector for the restriction of the space to [a, b].
template <typename Scalar>
KnotVector<Scalar> restrict_knot_vector(const KnotVector<Scalar>& kv, Scalar a, Scalar b, Scalar tol = Scalar(1e-12)) {
  if (!(a < b) || a < kv.front() - tol || b > kv.back() + tol)
    throw Error(ErrorKind::Domain, "restrict_knot_vector: invalid sub-interval");
  std::vector<Scalar> breaks{a};
  for (Scalar k : kv.breakpoints())
    if (k > a + tol && k < b - tol) breaks.push_back(k);
  breaks.push_back(b);
  return KnotVector<Scalar>::from_breakpoints(kv.degree(), breaks);
}

/// Matrix R with fine coefficients = R * coarse coefficients, built by
/// repeated single-knot (Boehm) insertion. `fine` must contain `coarse`.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> knot_insertion_matrix(const KnotVector<Scalar>& coarse,
                                                                            const KnotVector<Scalar>& fine) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (coarse.degree() != fine.degree()) throw Error(ErrorKind::Knots, "knot insertion: degree mismatch");
  const int p = coarse.degree();
  std::vector<Scalar> current = coarse.knots();
  std::vector<Scalar> extra;
  std::set_difference(fine.knots().begin(), fine.knots().end(), current.begin(), current.end(), std::back_inserter(extra));
  if (static_cast<int>(current.size() + extra.size()) != fine.size())
    throw Error(ErrorKind::Knots, "knot insertion: fine vector does not contain the coarse one");
  Mat R = Mat::Identity(coarse.dimension(), coarse.dimension());
  for (Scalar u : extra) {
    const int n = static_cast<int>(current.size()) - p - 1;
    int k = static_cast<int>(std::upper_bound(current.begin(), current.end(), u) - current.begin()) - 1;
    Mat step = Mat::Zero(n + 1, n);
    for (int i = 0; i <= n; ++i) {
      Scalar alpha;
      if (i <= k - p)
        alpha = 1;
      else if (i >= k + 1)
        alpha = 0;
      else
        alpha = (u - current[i]) / (current[i + p] - current[i]);
      if (i < n) step(i, i) += alpha;
      if (i >= 1) step(i, i - 1) += 1 - alpha;
    }
    R = step * R;
    current.insert(current.begin() + k + 1, u);
  }
  return R;
}

}  // namespace kplate
