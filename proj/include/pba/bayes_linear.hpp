#pragma once

#include "pba/linalg.hpp"

namespace pba {

// Second-order belief specification over one block of quantities.
struct BeliefSpec {
    Vector mean;
    Matrix variance;

    BeliefSpec() = default;
    BeliefSpec(Vector mean_, Matrix variance_);

    Eigen::Index dim() const { return mean.size(); }

    // Checks symmetry and positive semi-definiteness; clamps eigenvalues in
    // the tolerated negative band to zero. Throws SpecificationError otherwise.
    void validate();
};

// Joint second-order specification of a target block B and a data block D.
struct JointSpec {
    BeliefSpec beliefB;
    BeliefSpec beliefD;
    Matrix crossCov;  // Cov[B, D], |B| x |D|

    JointSpec() = default;
    JointSpec(BeliefSpec b, BeliefSpec d, Matrix cross);

    Eigen::Index dimB() const { return beliefB.dim(); }
    Eigen::Index dimD() const { return beliefD.dim(); }

    // Stacked [[Var B, Cov], [Cov', Var D]] must be PSD under the shared rule.
    void validate();

    Matrix stacked() const;
};

// Full output of a Bayes linear adjustment of B by D.
struct AdjustmentResult {
    Vector adjustedMean;
    Matrix adjustedVariance;   // Var[B] - resolvedVariance
    Matrix weights;            // |B| x |D| coefficient matrix on D
    Vector intercept;          // E[B] - weights * E[D]
    Matrix resolvedVariance;   // Cov * pinv(Var D) * Cov'
    Vector resolutionRatio;    // per element of B, in [0, 1]
};

// Adjusted expectation E_D[B] = E[B] + Cov[B,D] pinv(Var D) (d - E[D]).
Vector adjust_expectation(const JointSpec& joint, const Vector& observedD,
                          double pinvRelTol = 1e-10);

// Adjusted variance Var[B] - Cov pinv(Var D) Cov'.
Matrix adjust_variance(const JointSpec& joint, double pinvRelTol = 1e-10);

// Coefficients of the adjustment as an affine rule: weights * d + intercept.
struct AdjustmentWeights {
    Matrix weights;
    Vector intercept;
};
AdjustmentWeights adjustment_weights(const JointSpec& joint, double pinvRelTol = 1e-10);

// Everything at once, sharing one pseudo-inverse.
AdjustmentResult adjust(const JointSpec& joint, const Vector& observedD,
                        double pinvRelTol = 1e-10);

// Per-element 1 - diag(adjVarA) / diag(adjVarB), the lower bound on the
// proportion of uncertainty resolved by the richer adjustment A relative to
// the single-analysis adjustment B.
Vector resolution_ratio(const Matrix& priorVar, const Matrix& adjustedVarA,
                        const Matrix& adjustedVarB);

}  // namespace pba
