#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "kplate/error.hpp"
#include "kplate/types.hpp"

namespace kplate {

enum class SolveStatus { Converged, MaxIterations, Breakdown, Stagnation };

const char* to_string(SolveStatus s);

struct SolveResult {
  Vec x;
  int iterations = 0;
  double residual = 0;          ///< final relative residual ||b - Ax|| / ||b||
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<double> history;  ///< relative residual estimate, entry 0 is the initial one

  bool converged() const { return status == SolveStatus::Converged; }
};

struct KrylovOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  int restart = 50;  ///< GMRES cycle length; <= 0 means unrestarted
  /// GMRES family: accept the Arnoldi residual estimate at the end of a cycle.
  /// For inexact operators whose true residual cannot reach tol.
  bool trust_estimate = false;
};

struct IdentityPreconditioner {
  Vec operator()(const Vec& r) const { return r; }
};

/// Jacobi preconditioner from a matrix diagonal.
class JacobiPreconditioner {
 public:
  explicit JacobiPreconditioner(const Vec& diagonal) : inv_(diagonal.cwiseInverse()) {
    if (!inv_.allFinite()) throw Error(ErrorKind::PreconditionerSingular, "jacobi: zero diagonal entry");
  }
  Vec operator()(const Vec& r) const { return inv_.cwiseProduct(r); }

 private:
  Vec inv_;
};

/// Matrix as a callable operator.
template <typename Matrix>
auto as_operator(const Matrix& A) {
  return [&A](const Vec& x) -> Vec { return A * x; };
}

/// Preconditioned conjugate gradients. Nonpositive curvature is reported as
/// Breakdown, exhausting max_iter as MaxIterations.
template <typename Op, typename Prec>
SolveResult pcg(const Op& A, const Vec& b, const Prec& M, const KrylovOptions& opt = {}, const Vec& x0 = Vec()) {
  SolveResult res;
  const double bnorm = b.norm();
  res.x = x0.size() == b.size() ? x0 : Vec::Zero(b.size());
  if (bnorm == 0) {
    res.x.setZero();
    res.status = SolveStatus::Converged;
    res.history.push_back(0);
    return res;
  }
  Vec r = b - A(res.x);
  res.residual = r.norm() / bnorm;
  res.history.push_back(res.residual);
  if (res.residual <= opt.tol) {
    res.status = SolveStatus::Converged;
    return res;
  }
  Vec z = M(r);
  Vec p = z;
  double rz = r.dot(z);
  if (!(rz > 0)) {
    res.status = SolveStatus::Breakdown;
    return res;
  }
  while (res.iterations < opt.max_iter) {
    const Vec Ap = A(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0)) {
      res.status = SolveStatus::Breakdown;
      return res;
    }
    const double alpha = rz / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    ++res.iterations;
    res.residual = r.norm() / bnorm;
    res.history.push_back(res.residual);
    if (res.residual <= opt.tol) {
      res.status = SolveStatus::Converged;
      return res;
    }
    z = M(r);
    const double rz_new = r.dot(z);
    if (!(rz_new > 0)) {
      res.status = SolveStatus::Breakdown;
      return res;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  res.status = SolveStatus::MaxIterations;
  return res;
}

namespace detail {

/// Restarted right-preconditioned Arnoldi/GMRES. With Flexible the
/// preconditioned directions are stored (FGMRES); otherwise the correction is
/// preconditioned once per cycle. Both variants run the same recurrences, so
/// their residual histories agree for a fixed preconditioner.
template <bool Flexible, typename Op, typename Prec>
SolveResult arnoldi_gmres(const Op& A, const Vec& b, const Prec& M, const KrylovOptions& opt, const Vec& x0) {
  SolveResult res;
  const int n = static_cast<int>(b.size());
  const double bnorm = b.norm();
  res.x = x0.size() == n ? x0 : Vec::Zero(n);
  if (bnorm == 0) {
    res.x.setZero();
    res.status = SolveStatus::Converged;
    res.history.push_back(0);
    return res;
  }
  Vec r = b - A(res.x);
  double beta = r.norm();
  res.residual = beta / bnorm;
  res.history.push_back(res.residual);
  if (res.residual <= opt.tol) {
    res.status = SolveStatus::Converged;
    return res;
  }
  while (res.iterations < opt.max_iter) {
    const int left = opt.max_iter - res.iterations;
    const int m = opt.restart > 0 ? std::min(opt.restart, left) : left;
    Mat V(n, m + 1);
    Mat Z;
    if constexpr (Flexible) Z.resize(n, m);
    Mat H = Mat::Zero(m + 1, m);
    Vec cs = Vec::Zero(m), sn = Vec::Zero(m), g = Vec::Zero(m + 1);
    V.col(0) = r / beta;
    g(0) = beta;
    const double cycle_start = beta;
    int k = 0;
    bool invariant = false;
    for (int j = 0; j < m; ++j) {
      Vec z = M(V.col(j));
      Vec w = A(z);
      if constexpr (Flexible) Z.col(j) = z;
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double rho = std::hypot(H(j, j), H(j + 1, j));
      const double hnext = H(j + 1, j);
      if (rho == 0) {
        invariant = true;
        break;
      }
      cs(j) = H(j, j) / rho;
      sn(j) = H(j + 1, j) / rho;
      H(j, j) = rho;
      H(j + 1, j) = 0;
      g(j + 1) = -sn(j) * g(j);
      g(j) *= cs(j);
      k = j + 1;
      ++res.iterations;
      res.history.push_back(std::abs(g(j + 1)) / bnorm);
      if (std::abs(g(j + 1)) / bnorm <= opt.tol) break;
      if (hnext <= 1e-14 * rho) {  // invariant subspace reached
        invariant = true;
        break;
      }
      V.col(j + 1) = w / hnext;
    }
    if (k > 0) {
      const Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
      if constexpr (Flexible) {
        res.x += Z.leftCols(k) * y;
      } else {
        res.x += M(Vec(V.leftCols(k) * y));
      }
    }
    r = b - A(res.x);
    beta = r.norm();
    res.residual = beta / bnorm;
    if (res.residual <= opt.tol || (opt.trust_estimate && k > 0 && std::abs(g(k)) / bnorm <= opt.tol)) {
      res.status = SolveStatus::Converged;
      return res;
    }
    if (k == 0) {
      res.status = SolveStatus::Breakdown;
      return res;
    }
    if (invariant || beta >= cycle_start * (1 - 1e-12)) {
      res.status = SolveStatus::Stagnation;
      return res;
    }
  }
  res.status = SolveStatus::MaxIterations;
  return res;
}

}  // namespace detail

/// Restarted GMRES with a fixed right preconditioner.
template <typename Op, typename Prec>
SolveResult gmres(const Op& A, const Vec& b, const Prec& M, const KrylovOptions& opt = {}, const Vec& x0 = Vec()) {
  return detail::arnoldi_gmres<false>(A, b, M, opt, x0);
}

/// Flexible GMRES: the preconditioner may change between iterations.
template <typename Op, typename Prec>
SolveResult fgmres(const Op& A, const Vec& b, const Prec& M, const KrylovOptions& opt = {}, const Vec& x0 = Vec()) {
  return detail::arnoldi_gmres<true>(A, b, M, opt, x0);
}

// ------------------------------------------------------------- dense kernels

/// K U = M U diag(values), U^T M U = I, values ascending.
struct GeneralizedEig {
  Vec values;
  Mat vectors;
};

/// Symmetric-definite pencil (K, M). Throws Decomposition if M is not SPD.
GeneralizedEig generalized_eig(const Mat& K, const Mat& M);

/// One parametric direction of a fast-diagonalization operator.
struct FdDirection {
  Mat M, K;  ///< weighted mass and second-derivative matrices
  Mat U;     ///< generalized eigenvectors
  Vec d;     ///< generalized eigenvalues
};

/// Factors of K1 (x) M2 + M1 (x) K2 acting on vectors indexed i1 + n1 i2.
struct FdFactors {
  std::array<FdDirection, 2> dir;
  int size(int k) const { return static_cast<int>(dir[k].d.size()); }
  int size() const { return size(0) * size(1); }
};

FdFactors fd_factors(const Mat& K1, const Mat& M1, const Mat& K2, const Mat& M2);

/// Solve K1 S M2 + M1 S K2 = R for S, with r and s the column-major
/// (i1 fastest) vectorizations: S = U1 [(U1^T R U2) ./ (d1_i + d2_j)] U2^T.
Vec fd_apply(const FdFactors& f, const Vec& r);

/// Rank-one separation c(i, j) ~ w1(i) w2(j) of a positive sampled field from
/// the row and column means of log c. The product reproduces the geometric
/// mean of the grid.
struct SeparatedCoefficient {
  Vec w1, w2;
  double max_relative_error = 0;  ///< max |c - w1 w2^T| / c over the grid
};

SeparatedCoefficient separate_coefficient(const Mat& samples);

}  // namespace kplate
