#include "pba/exchangeability.hpp"

#include "pba/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace pba {

void ClassMoments::validate() const {
    if (varM.rows() != dim() || varM.cols() != dim() ||
        varResidual.rows() != dim() || varResidual.cols() != dim()) {
        throw ArgumentError("ClassMoments: moment dimensions do not match meanM");
    }
    validate_psd(varM, "ClassMoments varM");
    validate_psd(varResidual, "ClassMoments varResidual");
    validate_psd(totalVariance(), "ClassMoments Sigma");
}

namespace {

struct ClassIndex {
    std::vector<ClassMoments> sorted;          // ascending classId
    std::map<int, int> position;               // classId -> index in sorted
    Eigen::Index dim = 0;
};

ClassIndex index_classes(const std::vector<ClassMoments>& classes) {
    if (classes.empty()) throw ArgumentError("at least one class is required");
    ClassIndex idx;
    idx.sorted = classes;
    std::sort(idx.sorted.begin(), idx.sorted.end(),
              [](const ClassMoments& a, const ClassMoments& b) {
                  return a.classId < b.classId;
              });
    idx.dim = idx.sorted.front().dim();
    for (int i = 0; i < static_cast<int>(idx.sorted.size()); ++i) {
        const ClassMoments& c = idx.sorted[i];
        c.validate();
        if (c.dim() != idx.dim) {
            throw ArgumentError("all classes must share the dimension of y");
        }
        if (!idx.position.emplace(c.classId, i).second) {
            throw ArgumentError("duplicate classId in class moments");
        }
    }
    return idx;
}

// Cov[M_i, M_j] looked up from either side's crossVarM, defaulting to zero.
Matrix cross_cov(const ClassIndex& idx, int i, int j) {
    const ClassMoments& ci = idx.sorted[i];
    const ClassMoments& cj = idx.sorted[j];
    auto itI = ci.crossVarM.find(cj.classId);
    auto itJ = cj.crossVarM.find(ci.classId);
    if (itI != ci.crossVarM.end() && itJ != cj.crossVarM.end()) {
        if ((itI->second - itJ->second.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            throw SpecificationError("crossVarM is not transpose-symmetric between classes");
        }
    }
    if (itI != ci.crossVarM.end()) return itI->second;
    if (itJ != cj.crossVarM.end()) return itJ->second.transpose();
    return Matrix::Zero(idx.dim, idx.dim);
}

}  // namespace

JointSpec build_joint_D(const std::vector<ClassMoments>& classes,
                        const std::vector<AnalysisLabel>& labels) {
    if (labels.empty()) throw ArgumentError("build_joint_D: at least one label required");
    const ClassIndex idx = index_classes(classes);
    const Eigen::Index p = idx.dim;
    const Eigen::Index k = static_cast<Eigen::Index>(idx.sorted.size());
    const Eigen::Index n = static_cast<Eigen::Index>(labels.size());

    std::set<std::pair<int, int>> seen;
    std::vector<int> classOf(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        auto it = idx.position.find(labels[j].classId);
        if (it == idx.position.end()) {
            std::ostringstream os;
            os << "build_joint_D: label references unknown classId " << labels[j].classId;
            throw ArgumentError(os.str());
        }
        classOf[j] = it->second;
        if (!seen.emplace(labels[j].classId, labels[j].memberId).second) {
            throw ArgumentError("build_joint_D: duplicate (classId, memberId) label");
        }
    }

    Vector meanB(k * p);
    Matrix varB(k * p, k * p);
    for (Eigen::Index i = 0; i < k; ++i) {
        meanB.segment(i * p, p) = idx.sorted[i].meanM;
        for (Eigen::Index j = 0; j < k; ++j) {
            varB.block(i * p, j * p, p, p) =
                (i == j) ? idx.sorted[i].varM : cross_cov(idx, i, j);
        }
    }

    Vector meanD(n * p);
    Matrix varD(n * p, n * p);
    for (Eigen::Index j = 0; j < n; ++j) {
        const ClassMoments& cj = idx.sorted[classOf[j]];
        meanD.segment(j * p, p) = cj.meanM;
        for (Eigen::Index l = 0; l < n; ++l) {
            Matrix block;
            if (j == l) {
                block = cj.totalVariance();
            } else if (classOf[j] == classOf[l]) {
                block = cj.varM;
            } else {
                block = cross_cov(idx, classOf[j], classOf[l]);
            }
            varD.block(j * p, l * p, p, p) = block;
        }
    }

    Matrix cross(k * p, n * p);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cross.block(i * p, j * p, p, p) =
                (classOf[j] == i) ? idx.sorted[i].varM : cross_cov(idx, i, classOf[j]);
        }
    }

    return JointSpec(BeliefSpec(meanB, varB), BeliefSpec(meanD, varD), cross);
}

Vector adjust_class_means(const JointSpec& joint, const Vector& observedD) {
    return adjust_expectation(joint, observedD);
}

std::vector<Matrix> class_weights(const JointSpec& joint,
                                  const std::vector<ClassMoments>& classes,
                                  double pinvRelTol) {
    const ClassIndex idx = index_classes(classes);
    const Eigen::Index p = idx.dim;
    if (joint.dimB() != static_cast<Eigen::Index>(idx.sorted.size()) * p) {
        throw ArgumentError("class_weights: joint was not built from these classes");
    }
    const Matrix pinv = pseudo_inverse(joint.beliefD.variance, pinvRelTol);
    std::vector<Matrix> weights;
    weights.reserve(idx.sorted.size());
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(idx.sorted.size()); ++i) {
        // Cov[D, M_i] is the transpose of rows i of the joint cross covariance.
        weights.push_back(pinv * joint.crossCov.middleRows(i * p, p).transpose());
    }
    return weights;
}

std::vector<ClassMoments> estimate_class_moments(
    const std::vector<AnalysisLabel>& labels,
    const std::vector<ReplicateSample>& replicates,
    const MomentEstimationOptions& options) {
    const std::size_t nAnalyses = labels.size();
    const std::size_t nReps = replicates.size();
    if (nReps < 2) {
        throw EstimationError("estimate_class_moments: need at least 2 replicates");
    }
    for (const ReplicateSample& rep : replicates) {
        if (rep.values.size() != nAnalyses) {
            throw EstimationError("estimate_class_moments: replicate row length mismatch");
        }
    }
    const Eigen::Index p = replicates.front().values.front().size();

    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t j = 0; j < nAnalyses; ++j) members[labels[j].classId].push_back(j);
    for (const auto& [cid, js] : members) {
        if (js.size() < 2) {
            std::ostringstream os;
            os << "estimate_class_moments: class " << cid << " has " << js.size()
               << " sampled member(s); need at least 2 to separate M from R";
            throw EstimationError(os.str());
        }
    }

    const std::size_t k = members.size();
    std::vector<int> classIds;
    for (const auto& [cid, js] : members) classIds.push_back(cid);

    // Per-replicate class means and mean within-class covariance.
    std::vector<std::vector<Vector>> classMean(k, std::vector<Vector>(nReps));
    std::vector<Matrix> within(k, Matrix::Zero(p, p));
    for (std::size_t r = 0; r < nReps; ++r) {
        for (std::size_t ci = 0; ci < k; ++ci) {
            const auto& js = members[classIds[ci]];
            const double m = static_cast<double>(js.size());
            Vector mean = Vector::Zero(p);
            for (std::size_t j : js) mean += replicates[r].values[j];
            mean /= m;
            classMean[ci][r] = mean;
            Matrix s = Matrix::Zero(p, p);
            for (std::size_t j : js) {
                const Vector d = replicates[r].values[j] - mean;
                s += d * d.transpose();
            }
            within[ci] += s / (m - 1.0);
        }
    }
    for (std::size_t ci = 0; ci < k; ++ci) within[ci] /= static_cast<double>(nReps);

    // Between-replicate moments of the class means.
    std::vector<Vector> grand(k, Vector::Zero(p));
    for (std::size_t ci = 0; ci < k; ++ci) {
        for (std::size_t r = 0; r < nReps; ++r) grand[ci] += classMean[ci][r];
        grand[ci] /= static_cast<double>(nReps);
    }
    auto between = [&](std::size_t ci, std::size_t cj) {
        Matrix c = Matrix::Zero(p, p);
        for (std::size_t r = 0; r < nReps; ++r) {
            c += (classMean[ci][r] - grand[ci]) * (classMean[cj][r] - grand[cj]).transpose();
        }
        return Matrix(c / (static_cast<double>(nReps) - 1.0));
    };

    std::vector<ClassMoments> out(k);
    std::vector<Matrix> betweenVar(k);
    for (std::size_t ci = 0; ci < k; ++ci) {
        const double m = static_cast<double>(members[classIds[ci]].size());
        betweenVar[ci] = between(ci, ci);
        out[ci].classId = classIds[ci];
        out[ci].meanM = grand[ci];
        out[ci].varResidual = clamp_psd(within[ci], "estimated varResidual");
        out[ci].varM =
            clamp_psd(betweenVar[ci] - out[ci].varResidual / m, "estimated varM");
    }

    if (!options.zeroCrossCovariance && k > 1) {
        for (std::size_t ci = 0; ci < k; ++ci) {
            for (std::size_t cj = ci + 1; cj < k; ++cj) {
                Matrix c = between(ci, cj);
                if (!options.keepCrossCovariance) {
                    // Shrink to exactly zero when every element is within two
                    // standard errors of zero.
                    bool significant = false;
                    for (Eigen::Index a = 0; a < p && !significant; ++a) {
                        for (Eigen::Index b = 0; b < p && !significant; ++b) {
                            const double se = std::sqrt(
                                (betweenVar[ci](a, a) * betweenVar[cj](b, b) +
                                 c(a, b) * c(a, b)) /
                                static_cast<double>(nReps));
                            if (std::abs(c(a, b)) > 2.0 * se) significant = true;
                        }
                    }
                    if (!significant) continue;
                }
                out[ci].crossVarM[classIds[cj]] = c;
                out[cj].crossVarM[classIds[ci]] = c.transpose();
            }
        }
        // Repair the stacked class-mean covariance if estimation noise made it
        // indefinite, redistributing the clamped blocks.
        bool anyCross = false;
        for (const auto& c : out) anyCross = anyCross || !c.crossVarM.empty();
        if (anyCross) {
            Matrix stacked(k * p, k * p);
            for (std::size_t ci = 0; ci < k; ++ci) {
                for (std::size_t cj = 0; cj < k; ++cj) {
                    Matrix block = Matrix::Zero(p, p);
                    if (ci == cj) {
                        block = out[ci].varM;
                    } else if (auto it = out[ci].crossVarM.find(classIds[cj]);
                               it != out[ci].crossVarM.end()) {
                        block = it->second;
                    }
                    stacked.block(ci * p, cj * p, p, p) = block;
                }
            }
            Eigen::SelfAdjointEigenSolver<Matrix> eig(stacked);
            if (eig.eigenvalues().minCoeff() < 0.0) {
                stacked = clamp_psd(stacked, "estimated class-mean covariance");
                for (std::size_t ci = 0; ci < k; ++ci) {
                    out[ci].varM = stacked.block(ci * p, ci * p, p, p);
                    for (std::size_t cj = 0; cj < k; ++cj) {
                        if (ci != cj &&
                            out[ci].crossVarM.count(classIds[cj]) > 0) {
                            out[ci].crossVarM[classIds[cj]] =
                                stacked.block(ci * p, cj * p, p, p);
                        }
                    }
                }
            }
        }
    }
    return out;
}

GVector assemble_G(const Vector& e0, const Vector& adjustedClassMeans) {
    const Eigen::Index p = e0.size();
    if (p == 0) throw ArgumentError("assemble_G: e0 must be non-empty");
    if (adjustedClassMeans.size() % p != 0) {
        throw ArgumentError("assemble_G: class means are not a multiple of dim(y)");
    }
    GVector g;
    g.blockDim = p;
    g.components.resize(p + adjustedClassMeans.size());
    g.components.head(p) = e0;
    g.components.tail(adjustedClassMeans.size()) = adjustedClassMeans;
    return g;
}

}  // namespace pba
