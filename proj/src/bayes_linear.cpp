#include "pba/bayes_linear.hpp"

#include "pba/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <utility>

namespace pba {

BeliefSpec::BeliefSpec(Vector mean_, Matrix variance_)
    : mean(std::move(mean_)), variance(std::move(variance_)) {
    if (variance.rows() != mean.size() || variance.cols() != mean.size()) {
        throw ArgumentError("BeliefSpec: variance dimensions do not match mean");
    }
    validate();
}

void BeliefSpec::validate() {
    variance = validate_psd(variance, "BeliefSpec variance");
}

JointSpec::JointSpec(BeliefSpec b, BeliefSpec d, Matrix cross)
    : beliefB(std::move(b)), beliefD(std::move(d)), crossCov(std::move(cross)) {
    if (crossCov.rows() != beliefB.dim() || crossCov.cols() != beliefD.dim()) {
        throw ArgumentError("JointSpec: crossCov must be |B| x |D|");
    }
    validate();
}

Matrix JointSpec::stacked() const {
    const Eigen::Index nb = dimB();
    const Eigen::Index nd = dimD();
    Matrix s(nb + nd, nb + nd);
    s.topLeftCorner(nb, nb) = beliefB.variance;
    s.topRightCorner(nb, nd) = crossCov;
    s.bottomLeftCorner(nd, nb) = crossCov.transpose();
    s.bottomRightCorner(nd, nd) = beliefD.variance;
    return s;
}

void JointSpec::validate() {
    validate_psd(stacked(), "JointSpec stacked covariance");
}

namespace {

Matrix checked_pinv_varD(const JointSpec& joint, double relTol) {
    // validate_psd raises SpecificationError naming the offending eigenvalue
    // when Var[D] is indefinite beyond tolerance.
    const Matrix varD = validate_psd(joint.beliefD.variance, "Var[D]");
    return pseudo_inverse(varD, relTol);
}

void check_observed(const JointSpec& joint, const Vector& observedD) {
    if (observedD.size() != joint.dimD()) {
        std::ostringstream os;
        os << "observedD has dimension " << observedD.size() << ", expected "
           << joint.dimD();
        throw ArgumentError(os.str());
    }
}

}  // namespace

Vector adjust_expectation(const JointSpec& joint, const Vector& observedD,
                          double pinvRelTol) {
    check_observed(joint, observedD);
    // Same arithmetic path as the published weights so the affine rule
    // reproduces this value exactly.
    const AdjustmentWeights w = adjustment_weights(joint, pinvRelTol);
    return w.intercept + w.weights * observedD;
}

Matrix adjust_variance(const JointSpec& joint, double pinvRelTol) {
    const Matrix pinv = checked_pinv_varD(joint, pinvRelTol);
    Matrix adj = joint.beliefB.variance -
                 joint.crossCov * pinv * joint.crossCov.transpose();
    return clamp_psd(adj, "adjusted variance");
}

AdjustmentWeights adjustment_weights(const JointSpec& joint, double pinvRelTol) {
    const Matrix pinv = checked_pinv_varD(joint, pinvRelTol);
    AdjustmentWeights w;
    w.weights = joint.crossCov * pinv;
    w.intercept = joint.beliefB.mean - w.weights * joint.beliefD.mean;
    return w;
}

AdjustmentResult adjust(const JointSpec& joint, const Vector& observedD,
                        double pinvRelTol) {
    check_observed(joint, observedD);
    const Matrix pinv = checked_pinv_varD(joint, pinvRelTol);

    AdjustmentResult r;
    r.weights = joint.crossCov * pinv;
    r.intercept = joint.beliefB.mean - r.weights * joint.beliefD.mean;
    r.adjustedMean = r.intercept + r.weights * observedD;
    r.resolvedVariance = r.weights * joint.crossCov.transpose();
    r.resolvedVariance = clamp_psd(r.resolvedVariance, "resolved variance");
    r.adjustedVariance = joint.beliefB.variance - r.resolvedVariance;
    r.adjustedVariance = clamp_psd(r.adjustedVariance, "adjusted variance");

    const Eigen::Index nb = joint.dimB();
    r.resolutionRatio = Vector::Zero(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
        const double prior = joint.beliefB.variance(i, i);
        if (prior > 0.0) {
            double ratio = r.resolvedVariance(i, i) / prior;
            r.resolutionRatio[i] = std::clamp(ratio, 0.0, 1.0);
        }
    }
    return r;
}

Vector resolution_ratio(const Matrix& priorVar, const Matrix& adjustedVarA,
                        const Matrix& adjustedVarB) {
    if (priorVar.rows() != adjustedVarA.rows() ||
        priorVar.rows() != adjustedVarB.rows()) {
        throw ArgumentError("resolution_ratio: dimension mismatch");
    }
    validate_psd(priorVar, "resolution_ratio prior variance");
    validate_psd(adjustedVarA, "resolution_ratio adjusted variance A");
    validate_psd(adjustedVarB, "resolution_ratio adjusted variance B");

    const Eigen::Index n = priorVar.rows();
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double denom = adjustedVarB(i, i);
        if (denom <= 0.0) {
            std::ostringstream os;
            os << "resolution_ratio: degenerate denominator at element " << i;
            throw NumericalError(os.str());
        }
        out[i] = 1.0 - adjustedVarA(i, i) / denom;
    }
    return out;
}

}  // namespace pba
