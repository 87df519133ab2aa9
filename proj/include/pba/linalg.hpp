#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace pba {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Symmetry check with a relative tolerance on the largest absolute entry.
bool is_symmetric(const Matrix& m, double relTol = 1e-10);

// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition.
// Eigenvalues with |lambda| below relTol * max|lambda| are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double relTol = 1e-10);

// Validates that `m` is positive semi-definite under the shared tolerance policy:
// eigenvalues in [-relTol * lambdaMax, 0) are clamped to zero (with a warning sent
// to the registered handler), anything more negative raises SpecificationError
// naming the offending eigenvalue. Returns the clamped, exactly-symmetric matrix.
Matrix validate_psd(const Matrix& m, const std::string& what, double relTol = 1e-8);

// Clamps negative eigenvalues to zero unconditionally (moment-estimate repair).
// The magnitude of the most negative clamped eigenvalue is reported via the
// warning handler when it is nonzero.
Matrix clamp_psd(const Matrix& m, const std::string& what);

// Warnings from tolerance clamps go through here; default prints to stderr.
void set_warning_handler(std::function<void(const std::string&)> handler);
void emit_warning(const std::string& msg);

}  // namespace pba
