#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pba/errors.hpp"
#include "pba/exchangeability.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace pba;
using namespace pba::test;

namespace {

// One scalar class with mu = 0, Sigma = 2, Lambda = 1.
std::vector<ClassMoments> scalar_class() {
    ClassMoments c;
    c.classId = 1;
    c.meanM = Vector::Zero(1);
    c.varM = Matrix::Constant(1, 1, 1.0);
    c.varResidual = Matrix::Constant(1, 1, 1.0);
    return {c};
}

std::vector<AnalysisLabel> members_of(int classId, int count) {
    std::vector<AnalysisLabel> labels;
    for (int m = 0; m < count; ++m) labels.push_back({classId, m});
    return labels;
}

// Brute-force joint of the class means against the executed members,
// assembled entry by entry with plain loops from the second-order
// exchangeability rules.
JointSpec enumerate_joint(const std::vector<ClassMoments>& classes,
                          const std::vector<AnalysisLabel>& labels) {
    const Eigen::Index p = classes.front().dim();
    const Eigen::Index k = static_cast<Eigen::Index>(classes.size());
    const Eigen::Index n = static_cast<Eigen::Index>(labels.size());

    auto classAt = [&](int id) -> const ClassMoments& {
        for (const ClassMoments& c : classes) {
            if (c.classId == id) return c;
        }
        throw ArgumentError("unknown class");
    };
    auto crossOf = [&](int idA, int idB) -> Matrix {
        const ClassMoments& a = classAt(idA);
        auto it = a.crossVarM.find(idB);
        if (it != a.crossVarM.end()) return it->second;
        return Matrix::Zero(p, p);
    };

    JointSpec joint;
    joint.beliefB.mean.resize(k * p);
    joint.beliefB.variance.resize(k * p, k * p);
    for (Eigen::Index a = 0; a < k; ++a) {
        joint.beliefB.mean.segment(a * p, p) = classes[static_cast<std::size_t>(a)].meanM;
        for (Eigen::Index b = 0; b < k; ++b) {
            const int ida = classes[static_cast<std::size_t>(a)].classId;
            const int idb = classes[static_cast<std::size_t>(b)].classId;
            joint.beliefB.variance.block(a * p, b * p, p, p) =
                a == b ? classes[static_cast<std::size_t>(a)].varM : crossOf(ida, idb);
        }
    }
    joint.beliefD.mean.resize(n * p);
    joint.beliefD.variance.resize(n * p, n * p);
    joint.crossCov.resize(k * p, n * p);
    for (Eigen::Index j = 0; j < n; ++j) {
        const ClassMoments& cj = classAt(labels[static_cast<std::size_t>(j)].classId);
        joint.beliefD.mean.segment(j * p, p) = cj.meanM;
        for (Eigen::Index l = 0; l < n; ++l) {
            const ClassMoments& cl = classAt(labels[static_cast<std::size_t>(l)].classId);
            Matrix block;
            if (j == l) {
                block = cj.varM + cj.varResidual;
            } else if (cj.classId == cl.classId) {
                block = cj.varM;
            } else {
                block = crossOf(cj.classId, cl.classId);
            }
            joint.beliefD.variance.block(j * p, l * p, p, p) = block;
        }
        for (Eigen::Index a = 0; a < k; ++a) {
            const int ida = classes[static_cast<std::size_t>(a)].classId;
            joint.crossCov.block(a * p, j * p, p, p) =
                ida == cj.classId ? cj.varM : crossOf(ida, cj.classId);
        }
    }
    return joint;
}

}  // namespace

TEST_CASE("build_joint_D constructs the SOE covariance for one scalar class") {
    const JointSpec joint = build_joint_D(scalar_class(), members_of(1, 2));

    Matrix varD(2, 2);
    varD << 2.0, 1.0, 1.0, 2.0;
    check_close(joint.beliefD.variance, varD, 1e-14);
    Matrix cross(1, 2);
    cross << 1.0, 1.0;
    check_close(joint.crossCov, cross, 1e-14);
    CHECK(joint.beliefB.variance(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("build_joint_D: absent class keeps only cross-class covariance") {
    Rng rng = make_rng(21);
    const auto classes = random_class_moments(rng, 2, 1, true);
    const JointSpec joint = build_joint_D(classes, members_of(2, 3));
    // Row block for class 1 must equal Cov[M_1, M_2] for every member.
    const double c12 = classes[0].crossVarM.at(2)(0, 0);
    for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(joint.crossCov(0, j) == doctest::Approx(c12).epsilon(1e-12));
    }
}

TEST_CASE("build_joint_D: no residual variance makes within-class entries equal") {
    ClassMoments c;
    c.classId = 1;
    c.meanM = Vector::Zero(1);
    c.varM = Matrix::Constant(1, 1, 1.5);
    c.varResidual = Matrix::Zero(1, 1);
    const JointSpec joint = build_joint_D({c}, members_of(1, 3));
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            CHECK(joint.beliefD.variance(i, j) == doctest::Approx(1.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("build_joint_D rejects unknown class ids") {
    CHECK_THROWS_AS(build_joint_D(scalar_class(), members_of(9, 2)), ArgumentError);
}

TEST_CASE("adjust_class_means: explicit 2x2 inversion oracle gives 4/3") {
    const JointSpec joint = build_joint_D(scalar_class(), members_of(1, 2));
    Vector d(2);
    d << 1.0, 3.0;
    // (1,1) [[2,1],[1,2]]^-1 (1,3)' = 4/3
    const Vector adjusted = adjust_class_means(joint, d);
    CHECK(adjusted[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("adjust_class_means: prior-mean observations return the prior") {
    Rng rng = make_rng(22);
    const auto classes = random_class_moments(rng, 3, 2, true);
    std::vector<AnalysisLabel> labels;
    for (int c = 1; c <= 3; ++c) {
        for (int m = 0; m < 2; ++m) labels.push_back({c, m});
    }
    const JointSpec joint = build_joint_D(classes, labels);
    const Vector adjusted = adjust_class_means(joint, joint.beliefD.mean);
    check_close(adjusted, joint.beliefB.mean, 1e-10);
}

TEST_CASE("unobserved-member adjustment equals the class-mean adjustment (4/3)") {
    // Brute-force joint that includes the extra member as the target block.
    const auto classes = scalar_class();
    JointSpec memberJoint;
    memberJoint.beliefB.mean = Vector::Zero(1);
    memberJoint.beliefB.variance = Matrix::Constant(1, 1, 2.0);  // Sigma
    memberJoint.beliefD.mean = Vector::Zero(2);
    memberJoint.beliefD.variance.resize(2, 2);
    memberJoint.beliefD.variance << 2.0, 1.0, 1.0, 2.0;
    memberJoint.crossCov = Matrix::Constant(1, 2, 1.0);  // Cov[X_u, D_j] = Lambda

    Vector d(2);
    d << 1.0, 3.0;
    const Vector viaMember = adjust_expectation(memberJoint, d);
    const JointSpec joint = build_joint_D(classes, members_of(1, 2));
    const Vector viaClass = adjust_class_means(joint, d);
    CHECK(viaMember[0] == doctest::Approx(viaClass[0]).epsilon(1e-12));
    CHECK(viaMember[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("class_weights: hand inversion, uninformative members, relabelling") {
    const auto classes = scalar_class();
    const JointSpec joint = build_joint_D(classes, members_of(1, 2));
    const auto weights = class_weights(joint, classes);
    REQUIRE(weights.size() == 1);
    CHECK(weights[0](0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(weights[0](1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // Lambda = 0: members carry no information about M.
    ClassMoments flat;
    flat.classId = 1;
    flat.meanM = Vector::Zero(1);
    flat.varM = Matrix::Zero(1, 1);
    flat.varResidual = Matrix::Constant(1, 1, 2.0);
    const JointSpec jointFlat = build_joint_D({flat}, members_of(1, 2));
    const auto weightsFlat = class_weights(jointFlat, {flat});
    check_close(weightsFlat[0], Matrix::Zero(2, 1), 1e-12);

    // Exchangeability symmetry: weights are invariant to member relabelling.
    Rng rng = make_rng(23);
    const auto classes2 = random_class_moments(rng, 2, 1, true);
    std::vector<AnalysisLabel> labels = {{1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}};
    std::vector<AnalysisLabel> relabeled = {{1, 2}, {1, 0}, {1, 1}, {2, 1}, {2, 0}};
    const auto w1 = class_weights(build_joint_D(classes2, labels), classes2);
    const auto w2 = class_weights(build_joint_D(classes2, relabeled), classes2);
    for (std::size_t c = 0; c < w1.size(); ++c) check_close(w1[c], w2[c], 1e-12);
}

TEST_CASE("property: class-mean adjustment equals full enumeration on small instances") {
    Rng rng = make_rng(24);
    for (int k = 1; k <= 3; ++k) {
        for (Eigen::Index dim = 1; dim <= 2; ++dim) {
            for (int rep = 0; rep < 10; ++rep) {
                const auto classes = random_class_moments(rng, k, dim, true);
                std::vector<AnalysisLabel> labels;
                std::uniform_int_distribution<int> countDist(1, 4);
                for (int c = 1; c <= k; ++c) {
                    const int count = countDist(rng);
                    for (int m = 0; m < count; ++m) labels.push_back({c, m});
                }
                const JointSpec fast = build_joint_D(classes, labels);
                const JointSpec slow = enumerate_joint(classes, labels);
                const Vector d = random_vector(
                    rng, static_cast<Eigen::Index>(labels.size()) * dim, 2.0);
                check_close(adjust_class_means(fast, d), adjust_expectation(slow, d),
                            1e-10, "enumerated equivalence");
            }
        }
    }
}

TEST_CASE("property: sufficiency holds for every unobserved member") {
    Rng rng = make_rng(25);
    for (int rep = 0; rep < 25; ++rep) {
        const int k = 1 + static_cast<int>(rep % 3);
        const Eigen::Index dim = 1 + (rep % 2);
        const auto classes = random_class_moments(rng, k, dim, true);
        std::vector<AnalysisLabel> labels;
        std::uniform_int_distribution<int> countDist(1, 4);
        for (int c = 1; c <= k; ++c) {
            const int count = countDist(rng);
            for (int m = 0; m < count; ++m) labels.push_back({c, m});
        }
        const JointSpec joint = build_joint_D(classes, labels);
        const Vector d =
            random_vector(rng, static_cast<Eigen::Index>(labels.size()) * dim, 2.0);
        const Vector classMeans = adjust_class_means(joint, d);

        // Adjust a fresh unobserved member of each class by the same D.
        for (int c = 0; c < k; ++c) {
            const ClassMoments& cm = classes[static_cast<std::size_t>(c)];
            JointSpec memberJoint = joint;
            memberJoint.beliefB.mean = cm.meanM;
            memberJoint.beliefB.variance = cm.varM + cm.varResidual;
            Matrix cross(dim, joint.dimD());
            for (std::size_t j = 0; j < labels.size(); ++j) {
                Matrix block;
                if (labels[j].classId == cm.classId) {
                    block = cm.varM;
                } else {
                    auto it = cm.crossVarM.find(labels[j].classId);
                    block = it != cm.crossVarM.end() ? it->second : Matrix::Zero(dim, dim);
                }
                cross.middleCols(static_cast<Eigen::Index>(j) * dim, dim) = block;
            }
            memberJoint.crossCov = cross;
            const Vector viaMember = adjust_expectation(memberJoint, d);
            check_close(viaMember, classMeans.segment(c * dim, dim), 1e-10,
                        "sufficiency");
        }
    }
}

TEST_CASE("property: Var[D] from valid class moments is PSD") {
    Rng rng = make_rng(26);
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 1 + rep % 3;
        const auto classes = random_class_moments(rng, k, 2, true);
        std::vector<AnalysisLabel> labels;
        for (int c = 1; c <= k; ++c) {
            for (int m = 0; m < 3; ++m) labels.push_back({c, m});
        }
        const JointSpec joint = build_joint_D(classes, labels);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(joint.beliefD.variance);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("property: more observed members never increase the adjusted variance") {
    Rng rng = make_rng(27);
    for (int rep = 0; rep < 10; ++rep) {
        const auto classes = random_class_moments(rng, 2, 1, true);
        for (int m = 1; m <= 3; ++m) {
            std::vector<AnalysisLabel> fewer;
            std::vector<AnalysisLabel> more;
            for (int i = 0; i < m; ++i) fewer.push_back({1, i});
            more = fewer;
            more.push_back({1, m});
            fewer.push_back({2, 0});
            more.push_back({2, 0});
            const Matrix adjFew = adjust_variance(build_joint_D(classes, fewer));
            const Matrix adjMore = adjust_variance(build_joint_D(classes, more));
            CHECK(adjMore(0, 0) <= adjFew(0, 0) + 1e-10);
        }
    }
}

TEST_CASE("estimate_class_moments: constants collapse to exact moments") {
    std::vector<AnalysisLabel> labels = {{1, 0}, {1, 1}, {1, 2}};
    std::vector<ReplicateSample> reps;
    for (int r = 0; r < 5; ++r) {
        ReplicateSample s;
        for (int j = 0; j < 3; ++j) s.values.push_back(Vector::Constant(1, 4.2));
        reps.push_back(s);
    }
    const auto moments = estimate_class_moments(labels, reps);
    REQUIRE(moments.size() == 1);
    CHECK(moments[0].meanM[0] == doctest::Approx(4.2));
    CHECK(moments[0].varM(0, 0) == doctest::Approx(0.0));
    CHECK(moments[0].varResidual(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("estimate_class_moments rejects deficient tables") {
    std::vector<AnalysisLabel> oneMember = {{1, 0}};
    std::vector<ReplicateSample> reps(3);
    for (auto& r : reps) r.values.push_back(Vector::Zero(1));
    CHECK_THROWS_AS(estimate_class_moments(oneMember, reps), EstimationError);

    std::vector<AnalysisLabel> labels = {{1, 0}, {1, 1}};
    std::vector<ReplicateSample> single(1);
    single[0].values = {Vector::Zero(1), Vector::Zero(1)};
    CHECK_THROWS_AS(estimate_class_moments(labels, single), EstimationError);
}

TEST_CASE("estimate_class_moments recovers generator moments within 3 SEs") {
    // Synthetic SOE generator with known (mu, Lambda, Sigma): per replicate,
    // M ~ N(mu, Lambda), members add independent N(0, Sigma - Lambda).
    Rng rng = make_rng(28);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double mu = 1.7;
    const double lambda = 0.8;
    const double residual = 1.1;
    const int nReps = 2000;
    const int nMembers = 4;

    std::vector<AnalysisLabel> labels;
    for (int m = 0; m < nMembers; ++m) labels.push_back({1, m});
    std::vector<ReplicateSample> reps;
    reps.reserve(nReps);
    for (int r = 0; r < nReps; ++r) {
        const double m = mu + std::sqrt(lambda) * normal(rng);
        ReplicateSample s;
        for (int j = 0; j < nMembers; ++j) {
            s.values.push_back(Vector::Constant(1, m + std::sqrt(residual) * normal(rng)));
        }
        reps.push_back(s);
    }
    const auto moments = estimate_class_moments(labels, reps);

    const double seMean = std::sqrt((lambda + residual / nMembers) / nReps);
    CHECK(std::abs(moments[0].meanM[0] - mu) < 3 * seMean);
    const double seLambda =
        std::sqrt(2.0 / (nReps - 1)) * (lambda + residual / nMembers);
    CHECK(std::abs(moments[0].varM(0, 0) - lambda) < 3 * seLambda);
    const double seResidual =
        std::sqrt(2.0 / (static_cast<double>(nReps) * (nMembers - 1))) * residual;
    CHECK(std::abs(moments[0].varResidual(0, 0) - residual) < 3 * seResidual);
}

TEST_CASE("estimate_class_moments: independent classes shrink the cross term to zero") {
    Rng rng = make_rng(29);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int nReps = 2000;
    std::vector<AnalysisLabel> labels = {{1, 0}, {1, 1}, {2, 0}, {2, 1}};
    std::vector<ReplicateSample> reps;
    for (int r = 0; r < nReps; ++r) {
        const double m1 = normal(rng);
        const double m2 = 2.0 + 0.5 * normal(rng);
        ReplicateSample s;
        s.values.push_back(Vector::Constant(1, m1 + 0.3 * normal(rng)));
        s.values.push_back(Vector::Constant(1, m1 + 0.3 * normal(rng)));
        s.values.push_back(Vector::Constant(1, m2 + 0.3 * normal(rng)));
        s.values.push_back(Vector::Constant(1, m2 + 0.3 * normal(rng)));
        reps.push_back(s);
    }
    const auto shrunk = estimate_class_moments(labels, reps);
    CHECK(shrunk[0].crossVarM.empty());

    MomentEstimationOptions keep;
    keep.keepCrossCovariance = true;
    const auto kept = estimate_class_moments(labels, reps, keep);
    REQUIRE(kept[0].crossVarM.count(2) == 1);
    const double se = std::sqrt(1.0 * 0.25 / nReps);
    CHECK(std::abs(kept[0].crossVarM.at(2)(0, 0)) < 3 * se);
}

TEST_CASE("assemble_G orders J0 first then classes") {
    Vector e0(1);
    e0 << 2.5;
    Vector means(6);
    means << 1, 2, 3, 4, 5, 6;
    const GVector g = assemble_G(e0, means);
    CHECK(g.components.size() == 7);
    CHECK(g.blockCount() == 7);
    CHECK(g.components[0] == doctest::Approx(2.5));
    CHECK(g.components[6] == doctest::Approx(6.0));

    const GVector trivial = assemble_G(e0, Vector());
    CHECK(trivial.components.size() == 1);
}
