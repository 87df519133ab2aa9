#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pba/errors.hpp"
#include "pba/testbed.hpp"

#include <cmath>
#include <set>

using namespace pba;

namespace {

// Counts how many points fall in each of `strata` equal bins per dimension.
bool is_stratified(const Matrix& points, Eigen::Index strata) {
    for (Eigen::Index dim = 0; dim < points.cols(); ++dim) {
        std::set<Eigen::Index> seen;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const auto bin = static_cast<Eigen::Index>(points(i, dim) *
                                                       static_cast<double>(strata));
            seen.insert(std::min(bin, strata - 1));
        }
        if (static_cast<Eigen::Index>(seen.size()) != strata) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("plain Latin hypercube: one point per stratum per dimension") {
    DesignConfig cfg;
    cfg.n = 4;
    cfg.method = DesignMethod::LatinHypercube;
    cfg.seed = 3;
    const Matrix points = generate_design_points(cfg, 1);
    REQUIRE(points.rows() == 4);
    CHECK(is_stratified(points, 4));
}

TEST_CASE("k-extended hypercube: sub-designs are hypercubes and the union is finer") {
    DesignConfig cfg;
    cfg.n = 8;
    cfg.k = 2;
    cfg.method = DesignMethod::KExtendedLatinHypercube;
    cfg.seed = 10;
    const Matrix points = generate_design_points(cfg, 2);
    REQUIRE(points.rows() == 8);
    // Each half is itself a Latin hypercube of size 4.
    CHECK(is_stratified(points.topRows(4), 4));
    CHECK(is_stratified(points.bottomRows(4), 4));
    // The union covers all 8 fine strata exactly.
    CHECK(is_stratified(points, 8));
}

TEST_CASE("larger k-extension keeps exact stratification in every dimension") {
    DesignConfig cfg;
    cfg.n = 40;
    cfg.k = 4;
    cfg.seed = 77;
    const Matrix points = generate_design_points(cfg, 3);
    CHECK(is_stratified(points, 40));
    for (int s = 0; s < 4; ++s) {
        CHECK(is_stratified(points.middleRows(s * 10, 10), 10));
    }
}

TEST_CASE("design generation is deterministic and divisibility is enforced") {
    DesignConfig cfg;
    cfg.n = 12;
    cfg.k = 3;
    cfg.seed = 5;
    const Matrix a = generate_design_points(cfg, 2);
    const Matrix b = generate_design_points(cfg, 2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    cfg.k = 5;
    CHECK_THROWS_AS(generate_design_points(cfg, 2), ConfigError);
}

TEST_CASE("synthetic model: deterministic evaluator and truth generation") {
    const SyntheticModel model = SyntheticModel::desk_default();
    Vector x(3);
    x << 0.2, 0.5, 0.9;
    CHECK(model.evaluate(x, 2) == model.evaluate(x, 2));

    const TruthAndObservations a = generate_truth_and_obs(model, 42);
    const TruthAndObservations b = generate_truth_and_obs(model, 42);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.zAll - b.zAll).cwiseAbs().maxCoeff() == 0.0);

    // Zero discrepancy: y equals the evaluator at trueXStar.
    SyntheticModel clean = model;
    clean.discrepancyScale = 0.0;
    clean.sigmaESq = 0.0;
    const TruthAndObservations t = generate_truth_and_obs(clean, 1);
    for (Eigen::Index d = 0; d < clean.depthCount; ++d) {
        CHECK(t.y[d] == doctest::Approx(clean.evaluate(clean.trueXStar, d)));
        CHECK(t.zAll[d] == doctest::Approx(t.y[d]));
    }
}

TEST_CASE("observation noise variance matches sigmaESq over many seeds") {
    SyntheticModel model = SyntheticModel::desk_default();
    model.sigmaESq = 0.02;
    const int n = 10000;
    double sumSq = 0.0;
    for (int s = 0; s < n; ++s) {
        const TruthAndObservations t = generate_truth_and_obs(model, 10000 + s);
        const double e = t.zAll[0] - t.y[0];
        sumSq += e * e;
    }
    const double empirical = sumSq / n;
    const double se = model.sigmaESq * std::sqrt(2.0 / n);
    CHECK(std::abs(empirical - model.sigmaESq) < 3.0 * se);
}

TEST_CASE("ensemble outputs come from the evaluator at the design points") {
    const SyntheticModel model = SyntheticModel::desk_default();
    DesignConfig cfg;
    cfg.n = 20;
    cfg.k = 2;
    cfg.seed = 9;
    const Design design = generate_design(cfg, model);
    REQUIRE(design.outputs.cols() == model.depthCount);
    for (int i = 0; i < 5; ++i) {
        const Vector x = design.points.row(i).transpose();
        CHECK(design.outputs(i, 3) == doctest::Approx(model.evaluate(x, 3)));
    }
}
