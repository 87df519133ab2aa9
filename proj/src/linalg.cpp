#include "pba/linalg.hpp"

#include "pba/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <utility>

namespace pba {

namespace {

std::function<void(const std::string&)>& warning_handler() {
    static std::function<void(const std::string&)> handler = [](const std::string& msg) {
        std::cerr << "[pba warning] " << msg << "\n";
    };
    return handler;
}

std::mutex warn_mutex;

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard<std::mutex> lock(warn_mutex);
    warning_handler() = std::move(handler);
}

void emit_warning(const std::string& msg) {
    std::lock_guard<std::mutex> lock(warn_mutex);
    if (warning_handler()) warning_handler()(msg);
}

bool is_symmetric(const Matrix& m, double relTol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= relTol * scale;
}

Matrix pseudo_inverse(const Matrix& m, double relTol) {
    if (m.rows() != m.cols()) {
        throw ArgumentError("pseudo_inverse: matrix must be square");
    }
    // Work on the symmetrized matrix; inputs are symmetric up to roundoff.
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("pseudo_inverse: eigendecomposition failed");
    }
    const Vector& lambda = eig.eigenvalues();
    const double lmax = lambda.cwiseAbs().maxCoeff();
    const double cutoff = relTol * std::max(lmax, 1e-300);
    Vector inv = Vector::Zero(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (std::abs(lambda[i]) > cutoff) inv[i] = 1.0 / lambda[i];
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix validate_psd(const Matrix& m, const std::string& what, double relTol) {
    if (!is_symmetric(m)) {
        throw SpecificationError(what + ": matrix is not symmetric within tolerance");
    }
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw NumericalError(what + ": eigendecomposition failed");
    }
    Vector lambda = eig.eigenvalues();
    const double lmax = std::max(lambda.maxCoeff(), 0.0);
    const double floor = -relTol * std::max(lmax, 1e-300);
    double clamped = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < floor) {
            std::ostringstream os;
            os << what << ": indefinite, eigenvalue " << lambda[i]
               << " below tolerance " << floor;
            throw SpecificationError(os.str());
        }
        if (lambda[i] < 0.0) {
            clamped = std::min(clamped, lambda[i]);
            lambda[i] = 0.0;
        }
    }
    if (clamped < 0.0) {
        std::ostringstream os;
        os << what << ": clamped negative eigenvalue " << clamped << " to zero";
        emit_warning(os.str());
    }
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix clamp_psd(const Matrix& m, const std::string& what) {
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw NumericalError(what + ": eigendecomposition failed");
    }
    Vector lambda = eig.eigenvalues();
    double clamped = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < 0.0) {
            clamped = std::min(clamped, lambda[i]);
            lambda[i] = 0.0;
        }
    }
    if (clamped < 0.0) {
        std::ostringstream os;
        os << what << ": clamped negative eigenvalue " << clamped << " to zero";
        emit_warning(os.str());
    }
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace pba
