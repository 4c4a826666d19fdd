#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace smmsep::linalg {

bool RegularizeHermitian(Eigen::MatrixXcd& b, double floor) {
  const Index m = b.rows();
  b = 0.5 * (b + b.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(b);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    b = Eigen::MatrixXcd::Identity(m, m);
    return true;
  }
  const double lo = floor * lambda_max;
  bool floored = false;
  for (Index i = 0; i < m; ++i) {
    if (lambda(i) < lo) {
      lambda(i) = lo;
      floored = true;
    }
  }
  if (floored) {
    const auto& v = eig.eigenvectors();
    b = v * lambda.cast<cdouble>().asDiagonal() * v.adjoint();
    b = 0.5 * (b + b.adjoint()).eval();
  }
  const double trace = b.trace().real();
  b *= static_cast<double>(m) / trace;
  return floored;
}

Index FeatureDim(Index channels) { return channels * channels; }

Eigen::MatrixXd Features(const Eigen::Ref<const Eigen::MatrixXcd>& z) {
  const Index m = z.rows(), frames = z.cols();
  Eigen::MatrixXd phi(frames, FeatureDim(m));
  for (Index i = 0; i < m; ++i) phi.col(i) = z.row(i).cwiseAbs2().transpose();
  Index col = m;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      for (Index t = 0; t < frames; ++t) {
        const cdouble p = std::conj(z(i, t)) * z(j, t);
        phi(t, col) = p.real();
        phi(t, col + 1) = p.imag();
      }
      col += 2;
    }
  }
  return phi;
}

Eigen::VectorXd QuadraticCoefficients(const Eigen::MatrixXcd& a) {
  const Index m = a.rows();
  Eigen::VectorXd c(FeatureDim(m));
  for (Index i = 0; i < m; ++i) c(i) = a(i, i).real();
  Index col = m;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      c(col) = 2.0 * a(i, j).real();
      c(col + 1) = -2.0 * a(i, j).imag();
      col += 2;
    }
  }
  return c;
}

Eigen::MatrixXcd FeaturesToHermitian(const Eigen::Ref<const Eigen::VectorXd>& s, Index channels) {
  const Index m = channels;
  Eigen::MatrixXcd out(m, m);
  for (Index i = 0; i < m; ++i) out(i, i) = cdouble(s(i), 0.0);
  Index col = m;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      out(i, j) = cdouble(s(col), -s(col + 1));
      out(j, i) = std::conj(out(i, j));
      col += 2;
    }
  }
  return out;
}

double ConditionBound(const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& b_inv) {
  return b.trace().real() * b_inv.trace().real();
}

Eigen::VectorXd QuadraticFormsByFactor(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                       const Eigen::MatrixXcd& l) {
  const Index m = l.rows();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(features.rows());
  for (Index t = 0; t < features.rows(); ++t) {
    // z up to a phase from the column of z z^H with the largest diagonal.
    Index i = 0;
    if (features.row(t).head(m).maxCoeff(&i) <= 0.0) continue;
    const Eigen::MatrixXcd zz = FeaturesToHermitian(features.row(t).transpose(), m);
    const Eigen::VectorXcd z = zz.col(i) / std::sqrt(zz(i, i).real());
    q(t) = l.triangularView<Eigen::Lower>().solve(z).squaredNorm();
  }
  return q;
}

Eigen::VectorXcd PrincipalEigenvector(const Eigen::MatrixXcd& a, int max_iterations,
                                      double tolerance) {
  const Index m = a.rows();
  // Start from the column with the largest diagonal entry.
  Index start = 0;
  a.diagonal().real().maxCoeff(&start);
  Eigen::VectorXcd v = a.col(start);
  if (!(v.norm() > 0.0)) v = Eigen::VectorXcd::Ones(m);
  v.normalize();
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXcd next = a * v;
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    next /= norm;
    // Remove the arbitrary phase before measuring the change.
    const cdouble overlap = v.dot(next);
    if (std::abs(overlap) > 0.0) next *= std::conj(overlap) / std::abs(overlap);
    const double change = (next - v).norm();
    v = next;
    if (change < tolerance) break;
  }
  return v;
}

std::vector<int> MaxAssignment(const Eigen::MatrixXd& score) {
  // Hungarian algorithm (shortest augmenting path) on cost = -score.
  const int n = static_cast<int>(score.rows());
  if (score.cols() != n) ThrowInvalid("MaxAssignment: score matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(n + 1), 0.0), v(static_cast<size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<size_t>(n + 1), 0), way(static_cast<size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n + 1), inf);
    std::vector<char> used(static_cast<size_t>(n + 1), 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = -score(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<size_t>(n), 0);
  for (int j = 1; j <= n; ++j) assignment[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return assignment;
}

}  // namespace smmsep::linalg
