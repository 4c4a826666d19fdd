// Small dense linear-algebra helpers shared by the mixture model, the
// initialisation and the beamformer.
#pragma once

#include <vector>

#include "core/types.hpp"

namespace smmsep::linalg {

// Relative eigenvalue floor applied to every cACG parameter update.
inline constexpr double kEigenvalueFloor = 1e-10;

// Hermitian-symmetrises B, floors its eigenvalues at floor * lambda_max and
// rescales it to trace M. Returns true when the floor was active.
bool RegularizeHermitian(Eigen::MatrixXcd& b, double floor = kEigenvalueFloor);

// Real feature map of the Hermitian outer product z z^H.
//
// For M channels there are M^2 features: |z_i|^2 for every i, then
// Re(conj(z_i) z_j) and Im(conj(z_i) z_j) for every i < j. With these,
//   z^H A z        = Features(z) . QuadraticCoefficients(A)
//   sum_t w_t z z^H = FeaturesToHermitian(sum_t w_t Features(z_t))
// which turns the per-frame work of the mixture model into real GEMMs.
Index FeatureDim(Index channels);
// Z is M x T; returns T x M^2.
Eigen::MatrixXd Features(const Eigen::Ref<const Eigen::MatrixXcd>& z);
Eigen::VectorXd QuadraticCoefficients(const Eigen::MatrixXcd& a);
Eigen::MatrixXcd FeaturesToHermitian(const Eigen::Ref<const Eigen::VectorXd>& s, Index channels);

// Above this ConditionBound the feature GEMM loses too many digits to
// cancellation in z^H B^-1 z.
inline constexpr double kFeatureConditionLimit = 1e5;

// tr(B) tr(B^-1): at least the condition number of a Hermitian positive
// definite B and at most M^2 times it.
double ConditionBound(const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& b_inv);
// z^H B^-1 z for every row of a T x M^2 feature matrix, evaluated as
// |L^-1 z|^2 with L the Cholesky factor of B. Rows of zero vectors give 0.
Eigen::VectorXd QuadraticFormsByFactor(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                       const Eigen::MatrixXcd& l);

// Principal eigenvector by power iteration, unit norm.
Eigen::VectorXcd PrincipalEigenvector(const Eigen::MatrixXcd& a, int max_iterations = 50,
                                      double tolerance = 1e-10);

// Maximum-weight assignment for a square score matrix: result[row] = column.
std::vector<int> MaxAssignment(const Eigen::MatrixXd& score);

}  // namespace smmsep::linalg
