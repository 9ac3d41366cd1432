#pragma once

#include <Eigen/Dense>
#include <optional>

namespace cranebench::numerics {

enum class LinearSolveKind { kUnique, kNone, kInfinitelyMany };

struct LinearSolveResult {
  LinearSolveKind kind;
  // Present unless kind == kNone; minimum-norm solution when the system is
  // consistent but rank-deficient.
  std::optional<Eigen::VectorXd> x;
  int rank = 0;
};

// Classifies and solves A x = b with a rank-revealing decomposition.
// Singular values below 1e-10 * ||A||_2 are treated as zero.
LinearSolveResult solve_linear(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b);

// Minimizes ||A x - b||_2; returns the minimum-norm minimizer when A is
// rank-deficient.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& b);

}  // namespace cranebench::numerics
