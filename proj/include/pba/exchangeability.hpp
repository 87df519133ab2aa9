#pragma once

#include "pba/bayes_linear.hpp"
#include "pba/linalg.hpp"

#include <map>
#include <vector>

namespace pba {

// Second-order moments of one co-exchangeable class of posterior expectations.
// Each executed analysis j in class i decomposes as M(C_i) + R_j(C_i) with
// E[M] = meanM, Var[M] = varM, Var[R_j] = varResidual and residuals
// uncorrelated with everything else.
struct ClassMoments {
    int classId = 0;
    Vector meanM;
    Matrix varM;
    Matrix varResidual;
    // Cov[M(C_this), M(C_other)] keyed by the other class id. Missing entries
    // mean zero cross-class covariance.
    std::map<int, Matrix> crossVarM;

    Eigen::Index dim() const { return meanM.size(); }
    Matrix totalVariance() const { return varM + varResidual; }  // Sigma_i
    void validate() const;
};

// Identifies one executed analysis: which class it was drawn from and which
// member of that class it is.
struct AnalysisLabel {
    int classId = 0;
    int memberId = 0;
};

// Ordered components (E[y|z;J0], E_D[M(C_1)], ..., E_D[M(C_k)]), flattened.
struct GVector {
    Eigen::Index blockDim = 1;  // dimension of y
    Vector components;          // (k + 1) * blockDim entries

    Eigen::Index blockCount() const {
        return blockDim > 0 ? components.size() / blockDim : 0;
    }
};

// Builds the joint second-order specification of the class means M(C_1..k)
// (block B) and the executed analyses (block D) from co-exchangeability:
// Var[D] has diagonal blocks Sigma_i, within-class off-diagonal blocks
// Lambda_i and cross-class blocks Cov[M_i, M_j]; Cov[M_i, D_j] is Lambda_i
// for members of class i and Cov[M_i, M_n(j)] otherwise.
JointSpec build_joint_D(const std::vector<ClassMoments>& classes,
                        const std::vector<AnalysisLabel>& labels);

// Jointly adjusted class means E_D[M(C_i)], stacked in classId order.
Vector adjust_class_means(const JointSpec& joint, const Vector& observedD);

// Per-class weight matrices W_i = pinv(Var D) Cov[D, M(C_i)] (|D| x dim).
std::vector<Matrix> class_weights(const JointSpec& joint,
                                  const std::vector<ClassMoments>& classes,
                                  double pinvRelTol = 1e-10);

// One replicate's worth of executed-analysis values: value[j] corresponds to
// labels[j] of the run, each a vector of dimension dim(y).
struct ReplicateSample {
    std::vector<Vector> values;
};

struct MomentEstimationOptions {
    // Cross-class covariances below 2 standard errors are shrunk to exactly 0
    // unless keepCrossCovariance forces the raw estimate; zeroCrossCovariance
    // forces 0 regardless.
    bool keepCrossCovariance = false;
    bool zeroCrossCovariance = false;
};

// Estimates per-class SOE moments from a replicate table. Needs >= 2
// replicates and >= 2 sampled members per class. Uses unbiased within/between
// replicate variance components:
//   varResidual_i = mean over replicates of the within-class sample variance,
//   varM_i        = variance over replicates of the class mean, minus
//                   varResidual_i / m_i, clamped PSD,
//   crossVarM_ij  = covariance over replicates of the class means.
std::vector<ClassMoments> estimate_class_moments(
    const std::vector<AnalysisLabel>& labels,
    const std::vector<ReplicateSample>& replicates,
    const MomentEstimationOptions& options = {});

// Concatenates E[y|z;J0] with the adjusted class means, J0 first then classes
// in ascending classId order.
GVector assemble_G(const Vector& e0, const Vector& adjustedClassMeans);

}  // namespace pba
