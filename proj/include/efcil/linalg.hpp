#pragma once

#include <vector>

#include <Eigen/Dense>

namespace efcil {

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Sweeps until the off-diagonal Frobenius norm falls below
/// `tolerance * ||A||_F` or `max_sweeps` is reached.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double tolerance = 1e-15, int max_sweeps = 100);

}  // namespace efcil
