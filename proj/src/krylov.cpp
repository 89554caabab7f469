#include "kplate/krylov.hpp"

#include <Eigen/Eigenvalues>

namespace kplate {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Breakdown: return "breakdown";
    case SolveStatus::Stagnation: return "stagnation";
  }
  return "unknown";
}

GeneralizedEig generalized_eig(const Mat& K, const Mat& M) {
  if (K.rows() != K.cols() || M.rows() != M.cols() || K.rows() != M.rows())
    throw Error(ErrorKind::Dimension, "generalized_eig: K and M must be square and of equal size");
  GeneralizedEig out;
  if (K.rows() == 0) return out;
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Decomposition, "generalized_eig: M is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, M, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Decomposition, "generalized_eig: eigensolver failed");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

FdFactors fd_factors(const Mat& K1, const Mat& M1, const Mat& K2, const Mat& M2) {
  FdFactors f;
  const std::array<const Mat*, 4> in{&K1, &M1, &K2, &M2};
  for (int k = 0; k < 2; ++k) {
    auto& d = f.dir[k];
    d.K = *in[2 * k];
    d.M = *in[2 * k + 1];
    const auto eig = generalized_eig(d.K, d.M);
    d.U = eig.vectors;
    d.d = eig.values;
  }
  return f;
}

Vec fd_apply(const FdFactors& f, const Vec& r) {
  const int n1 = f.size(0), n2 = f.size(1);
  if (r.size() != n1 * n2) throw Error(ErrorKind::Dimension, "fd_apply: vector size does not match the factors");
  const Eigen::Map<const Mat> R(r.data(), n1, n2);
  Mat Y = f.dir[0].U.transpose() * R * f.dir[1].U;
  const double scale = f.dir[0].d.cwiseAbs().maxCoeff() + f.dir[1].d.cwiseAbs().maxCoeff();
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const double s = f.dir[0].d(i) + f.dir[1].d(j);
      if (std::abs(s) <= 1e-14 * scale) throw Error(ErrorKind::PreconditionerSingular, "fd_apply: singular eigenvalue sum");
      Y(i, j) /= s;
    }
  const Mat S = f.dir[0].U * Y * f.dir[1].U.transpose();
  return Eigen::Map<const Vec>(S.data(), S.size());
}

SeparatedCoefficient separate_coefficient(const Mat& samples) {
  if (samples.size() == 0) throw Error(ErrorKind::Coefficient, "separate_coefficient: empty sample grid");
  if (!(samples.array() > 0).all() || !samples.allFinite())
    throw Error(ErrorKind::Coefficient, "separate_coefficient: coefficient samples must be positive");
  const Mat L = samples.array().log().matrix();
  const Vec row = L.rowwise().mean();
  const Vec col = L.colwise().mean().transpose();
  const double g = L.mean();
  SeparatedCoefficient s;
  s.w1 = (row.array() - g / 2).exp().matrix();
  s.w2 = (col.array() - g / 2).exp().matrix();
  s.max_relative_error = ((samples - s.w1 * s.w2.transpose()).array().abs() / samples.array()).maxCoeff();
  return s;
}

}  // namespace kplate
