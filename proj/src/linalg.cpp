#include "cranebench/linalg.hpp"

#include <stdexcept>

namespace cranebench::numerics {

namespace {
constexpr double kRankRtol = 1e-10;

int rank_with_threshold(const Eigen::MatrixXd& M, double threshold) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > threshold) ++r;
  return r;
}
}  // namespace

LinearSolveResult solve_linear(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("solve_linear expects a square matrix");
  if (A.rows() != b.size())
    throw std::invalid_argument("dimension mismatch between A and b");
  if (!A.allFinite() || !b.allFinite())
    throw std::invalid_argument("solve_linear requires finite entries");

  const Eigen::Index n = A.cols();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankRtol);
  const double norm_a = svd.singularValues().size() > 0
                            ? svd.singularValues()[0]
                            : 0.0;
  const double threshold = kRankRtol * std::max(norm_a, 1e-300);

  int rank_a = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > threshold) ++rank_a;

  LinearSolveResult res;
  res.rank = rank_a;
  if (rank_a == n) {
    res.kind = LinearSolveKind::kUnique;
    res.x = svd.solve(b);
    return res;
  }

  Eigen::MatrixXd augmented(A.rows(), n + 1);
  augmented << A, b;
  const int rank_aug = rank_with_threshold(augmented, threshold);
  if (rank_aug > rank_a) {
    res.kind = LinearSolveKind::kNone;
    return res;
  }

  res.kind = LinearSolveKind::kInfinitelyMany;
  // Truncated-SVD pseudoinverse solve: the minimum-norm solution.
  Eigen::VectorXd s_inv_ub = Eigen::VectorXd::Zero(svd.singularValues().size());
  const Eigen::VectorXd ub = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > threshold)
      s_inv_ub[i] = ub[i] / svd.singularValues()[i];
  res.x = svd.matrixV() * s_inv_ub;
  return res;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& b) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("least_squares expects a nonempty matrix");
  if (A.rows() != b.size())
    throw std::invalid_argument("dimension mismatch between A and b");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankRtol);
  return svd.solve(b);
}

}  // namespace cranebench::numerics
