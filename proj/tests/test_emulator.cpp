#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pba/emulator.hpp"
#include "pba/errors.hpp"
#include "test_util.hpp"

#include <cmath>
#include <limits>

using namespace pba;
using namespace pba::test;

namespace {

CorrelationSpec spec_1d(CorrelationFamily family, double power, double kappa,
                        double nugget = 0.0) {
    CorrelationSpec s;
    s.family = family;
    s.power = power;
    s.kappa = Vector::Constant(1, kappa);
    s.nugget = nugget;
    return s;
}

Design design_1d(const Vector& x, const Vector& f) {
    Design d;
    d.points = x;
    d.outputs = f;
    return d;
}

// Reference-prior conjugate fit and prediction assembled with dense inverses
// and textbook formulas only.
struct OraclePrediction {
    double mean;
    double variance;
};

OraclePrediction oracle_predict(const Matrix& points, const Vector& f,
                                const BasisSpec& basis, const CorrelationSpec& corr,
                                const Vector& query) {
    const Eigen::Index n = points.rows();
    const Eigen::Index q = basis.size();

    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = correlation(points.row(i).transpose(),
                                         points.row(j).transpose(), corr);
            a(i, j) = (i == j) ? 1.0 : (1.0 - corr.nugget) * r;
        }
    }
    const Matrix aInv = a.inverse();
    const Matrix x = basis_matrix(basis, points);
    const Matrix gram = x.transpose() * aInv * x;
    const Matrix gramInv = gram.inverse();
    const Vector betaHat = gramInv * x.transpose() * aInv * f;
    const Vector resid = f - x * betaHat;
    const double s = resid.dot(aInv * resid);
    const double sigmaHatSq = s / static_cast<double>(n - q - 2);

    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector xi = points.row(i).transpose();
        double v = (1.0 - corr.nugget) * correlation(query, xi, corr);
        if ((query - xi).cwiseAbs().maxCoeff() <= 1e-12) v += corr.nugget;
        t[i] = v;
    }
    const Vector g = evaluate_basis(basis, query);
    const Vector h = g - x.transpose() * aInv * t;

    OraclePrediction out;
    out.mean = g.dot(betaHat) + t.dot(aInv * resid);
    out.variance = sigmaHatSq * (1.0 - t.dot(aInv * t) + h.dot(gramInv * h));
    return out;
}

// Marginal likelihood of (kappa, nu) assembled step by step with dense
// determinants, plus the prior densities with a finite-difference Jacobian.
double oracle_log_marginal(const Vector& kappa, double nu, const Design& design,
                           const BasisSpec& basis, const HyperPriors& priors,
                           CorrelationFamily family, double power) {
    const Eigen::Index n = design.n();
    const Eigen::Index q = basis.size();
    CorrelationSpec spec;
    spec.family = family;
    spec.power = power;
    spec.kappa = kappa;
    spec.nugget = nu;

    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = correlation(design.points.row(i).transpose(),
                                         design.points.row(j).transpose(), spec);
            a(i, j) = (i == j) ? 1.0 : (1.0 - nu) * r;
        }
    }
    const Matrix aInv = a.inverse();
    const Vector f = design.outputs.col(0);
    const Matrix x = basis_matrix(basis, design.points);
    const Matrix gram = x.transpose() * aInv * x;
    const Vector betaHat = gram.inverse() * x.transpose() * aInv * f;
    const Vector resid = f - x * betaHat;
    const double s = resid.dot(aInv * resid);

    const double half = 0.5 * static_cast<double>(n - q);
    double value = -half * std::log(2.0 * M_PI) - 0.5 * std::log(a.determinant()) -
                   0.5 * std::log(gram.determinant()) + std::lgamma(half) -
                   half * std::log(0.5 * s);

    value += priors.nuBeta.log_pdf(nu);
    for (Eigen::Index i = 0; i < kappa.size(); ++i) {
        const double rho = correlation_1d(family, power, kappa[i], priors.halfRange);
        value += priors.kappaBeta[static_cast<std::size_t>(i)].log_pdf(rho);
    }
    return value;
}

}  // namespace

TEST_CASE("correlation families: unit value at zero distance, known references") {
    const Vector x = Vector::Constant(1, 0.3);
    for (auto family : {CorrelationFamily::PowerExponential, CorrelationFamily::Matern32,
                        CorrelationFamily::Matern52}) {
        CHECK(correlation(x, x, spec_1d(family, 2.0, 1.7)) == doctest::Approx(1.0));
    }
    // exp(-1) for the Gaussian form at kappa = 1, h = 1
    const double pe = correlation_1d(CorrelationFamily::PowerExponential, 2.0, 1.0, 1.0);
    CHECK(std::abs(pe - std::exp(-1.0)) < 1e-12);
    // (1 + sqrt(3)) exp(-sqrt(3))
    const double m32 = correlation_1d(CorrelationFamily::Matern32, 2.0, 1.0, 1.0);
    CHECK(std::abs(m32 - (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0))) < 1e-12);
}

TEST_CASE("correlation is symmetric and monotone decreasing per dimension") {
    Rng rng = make_rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto family : {CorrelationFamily::PowerExponential, CorrelationFamily::Matern32,
                        CorrelationFamily::Matern52}) {
        CorrelationSpec spec;
        spec.family = family;
        spec.power = 1.9;
        spec.kappa = Vector::Constant(2, 3.0);
        for (int rep = 0; rep < 20; ++rep) {
            Vector a(2), b(2);
            for (int i = 0; i < 2; ++i) {
                a[i] = unif(rng);
                b[i] = unif(rng);
            }
            CHECK(correlation(a, b, spec) == doctest::Approx(correlation(b, a, spec)));
        }
        double prev = 1.0 + 1e-12;
        for (double h = 0.0; h <= 1.0; h += 0.05) {
            const double r = correlation_1d(family, 1.9, 3.0, h);
            CHECK(r <= prev + 1e-12);
            prev = r;
        }
    }
}

TEST_CASE("half-length correlation inversion") {
    // Closed form: exp(-kappa 0.25) = exp(-1) at kappa = 4.
    CHECK(half_length_to_kappa(std::exp(-1.0), CorrelationFamily::PowerExponential, 2.0,
                               0.5) == doctest::Approx(4.0).epsilon(1e-12));

    CHECK_THROWS_AS(
        half_length_to_kappa(1.0, CorrelationFamily::PowerExponential, 2.0, 0.5),
        ArgumentError);
    CHECK_THROWS_AS(
        half_length_to_kappa(0.0, CorrelationFamily::Matern32, 2.0, 0.5),
        ArgumentError);

    Rng rng = make_rng(32);
    std::uniform_real_distribution<double> kappaDist(0.05, 60.0);
    for (int i = 0; i < 50; ++i) {
        const double kappa = kappaDist(rng);
        for (auto family : {CorrelationFamily::Matern32, CorrelationFamily::Matern52}) {
            const double rho = kappa_to_half_length(kappa, family, 2.0, 0.5);
            const double back = half_length_to_kappa(rho, family, 2.0, 0.5);
            CHECK(std::abs(back - kappa) <= 1e-10 * std::max(1.0, kappa));
        }
    }
}

TEST_CASE("basis selection: recovery, constant policy, greedy oracle") {
    Rng rng = make_rng(33);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Outputs exactly linear in x1: stepwise finds x1 and R^2 = 1.
    Design linear;
    linear.points = random_matrix(rng, 30, 2, 0.2);
    linear.points = linear.points.cwiseAbs().cwiseMin(1.0);
    linear.outputs.resize(30, 1);
    for (int i = 0; i < 30; ++i) {
        linear.outputs(i, 0) = 2.0 + 3.0 * linear.points(i, 0);
    }
    BasisPolicy stepwise;
    stepwise.kind = BasisPolicyKind::Stepwise;
    const BasisSelection sel = select_basis(linear, 0, stepwise);
    bool hasX1 = false;
    for (const auto& t : sel.basis.terms) {
        if (t == std::vector<int>{1, 0}) hasX1 = true;
    }
    CHECK(hasX1);
    CHECK(sel.olsR2 == doctest::Approx(1.0).epsilon(1e-9));

    BasisPolicy constant;
    constant.kind = BasisPolicyKind::Constant;
    const BasisSelection c = select_basis(linear, 0, constant);
    CHECK(c.basis.size() == 1);

    // Quadratic response on a 20-point 1-D design: the first greedy addition
    // must match the best single candidate found by exhaustive search.
    Design quad;
    quad.points.resize(20, 1);
    for (int i = 0; i < 20; ++i) quad.points(i, 0) = (i + 0.5) / 20.0;
    quad.outputs.resize(20, 1);
    for (int i = 0; i < 20; ++i) {
        quad.outputs(i, 0) = quad.points(i, 0) * quad.points(i, 0);
    }
    const BasisSelection q = select_basis(quad, 0, stepwise);
    // Exhaustive oracle over the candidate pool for the first addition.
    double bestRss = std::numeric_limits<double>::infinity();
    std::vector<int> bestTerm;
    for (int power = 1; power <= 3; ++power) {
        BasisSpec trial = BasisSpec::constant(1);
        trial.terms.push_back({power});
        const Matrix xm = basis_matrix(trial, quad.points);
        const Vector beta = xm.colPivHouseholderQr().solve(quad.outputs.col(0));
        const double rss = (quad.outputs.col(0) - xm * beta).squaredNorm();
        if (rss < bestRss) {
            bestRss = rss;
            bestTerm = {power};
        }
    }
    CHECK(bestTerm == std::vector<int>{2});
    REQUIRE(q.basis.size() >= 2);
    CHECK(q.basis.terms[1] == bestTerm);
}

TEST_CASE("stepwise rejects a degenerate degrees-of-freedom budget") {
    Rng rng = make_rng(34);
    Design d;
    d.points = Matrix::Zero(10, 1);
    for (int i = 0; i < 10; ++i) d.points(i, 0) = (i + 0.5) / 10.0;
    d.outputs = random_matrix(rng, 10, 1);
    BasisPolicy p;
    p.kind = BasisPolicyKind::Stepwise;
    p.dfFraction = 0.1;  // floor(1) < 2 terms
    CHECK_THROWS_AS(select_basis(d, 0, p), ArgumentError);
}

TEST_CASE("fit and predict match the dense conjugate oracle") {
    Rng rng = make_rng(35);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int n = 5; n <= 8; ++n) {
        Design d;
        d.points.resize(n, 1);
        for (int i = 0; i < n; ++i) d.points(i, 0) = (i + 0.7) / n;
        d.outputs.resize(n, 1);
        for (int i = 0; i < n; ++i) {
            d.outputs(i, 0) = std::sin(3.0 * d.points(i, 0)) + 0.5 * d.points(i, 0);
        }
        const BasisSpec basis = BasisSpec::constant(1);
        const CorrelationSpec corr =
            spec_1d(CorrelationFamily::PowerExponential, 2.0, 6.0, 0.1);
        const EmulatorPosterior em = fit_emulator(d, 0, basis, corr);
        for (int rep = 0; rep < 10; ++rep) {
            Vector query(1);
            query << unif(rng);
            const Prediction p = predict(em, query);
            const OraclePrediction o =
                oracle_predict(d.points, d.outputs.col(0), basis, corr, query);
            CHECK(std::abs(p.mean - o.mean) < 1e-8);
            CHECK(std::abs(p.variance - o.variance) < 1e-8);
        }
    }
}

TEST_CASE("interpolation at design points with zero nugget") {
    Design d;
    d.points.resize(6, 2);
    d.outputs.resize(6, 1);
    Rng rng = make_rng(36);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 6; ++i) {
        d.points(i, 0) = unif(rng);
        d.points(i, 1) = unif(rng);
        d.outputs(i, 0) = std::cos(d.points(i, 0)) + d.points(i, 1);
    }
    CorrelationSpec corr;
    corr.family = CorrelationFamily::Matern52;
    corr.kappa = Vector::Constant(2, 4.0);
    corr.nugget = 0.0;
    const EmulatorPosterior em = fit_emulator(d, 0, BasisSpec::constant(2), corr);
    for (int i = 0; i < 6; ++i) {
        const Prediction p = predict(em, d.points.row(i).transpose());
        CHECK(std::abs(p.mean - d.outputs(i, 0)) < 1e-8);
        CHECK(p.variance < 1e-8);
    }
}

TEST_CASE("constant basis with two symmetric points predicts the average midway") {
    Design d;
    d.points.resize(2, 1);
    d.points << 0.2, 0.8;
    d.outputs.resize(2, 1);
    d.outputs << 1.0, 3.0;
    const EmulatorPosterior em = fit_emulator(
        d, 0, BasisSpec::constant(1), spec_1d(CorrelationFamily::PowerExponential, 2.0, 2.0));
    CHECK(predict_mean(em, Vector::Constant(1, 0.5)) ==
          doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("extrapolation variance grows outside the design hull") {
    Design d;
    d.points.resize(8, 1);
    for (int i = 0; i < 8; ++i) d.points(i, 0) = 0.3 + 0.05 * i;
    d.outputs.resize(8, 1);
    for (int i = 0; i < 8; ++i) d.outputs(i, 0) = 1.0 + d.points(i, 0);
    const EmulatorPosterior em = fit_emulator(
        d, 0, BasisSpec::linear_all(1),
        spec_1d(CorrelationFamily::PowerExponential, 2.0, 8.0, 0.05));
    const Prediction centre = predict(em, Vector::Constant(1, 0.475));
    const Prediction far = predict(em, Vector::Constant(1, 0.999));
    CHECK(far.variance > centre.variance);
}

TEST_CASE("polynomial reproduction: exact mean on basis-span responses") {
    Rng rng = make_rng(37);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Design d;
    d.points = random_matrix(rng, 12, 2, 0.25).cwiseAbs().cwiseMin(1.0);
    d.outputs.resize(12, 1);
    for (int i = 0; i < 12; ++i) {
        d.outputs(i, 0) = 1.5 - 2.0 * d.points(i, 0) + 0.7 * d.points(i, 1);
    }
    CorrelationSpec corr;
    corr.family = CorrelationFamily::PowerExponential;
    corr.power = 2.0;
    corr.kappa = Vector::Constant(2, 3.0);
    corr.nugget = 0.0;
    const EmulatorPosterior em = fit_emulator(d, 0, BasisSpec::linear_all(2), corr);
    for (int rep = 0; rep < 20; ++rep) {
        Vector x(2);
        x << unif(rng), unif(rng);
        const double truth = 1.5 - 2.0 * x[0] + 0.7 * x[1];
        CHECK(std::abs(predict_mean(em, x) - truth) < 1e-7);
    }
}

TEST_CASE("correlation matrices are PSD after the jitter ladder on random designs") {
    Rng rng = make_rng(38);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_real_distribution<double> kappaDist(0.5, 40.0);
    std::uniform_int_distribution<int> famDist(0, 2);
    std::uniform_int_distribution<int> nDist(5, 25);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = nDist(rng);
        const Eigen::Index r = 1 + rep % 3;
        Design d;
        d.points.resize(n, r);
        for (int i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < r; ++j) d.points(i, j) = unif(rng);
        }
        d.outputs = Matrix::Zero(n, 1);
        CorrelationSpec spec;
        const int fam = famDist(rng);
        spec.family = fam == 0 ? CorrelationFamily::PowerExponential
                               : (fam == 1 ? CorrelationFamily::Matern32
                                           : CorrelationFamily::Matern52);
        spec.power = 1.5 + unif(rng) / 2.0;
        spec.kappa = Vector::Constant(r, kappaDist(rng));
        spec.nugget = 0.0;

        Matrix a = correlation_matrix(d.points, spec);
        bool factored = false;
        for (double jitter : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
            Matrix trial = a;
            trial.diagonal().array() += jitter;
            if (Eigen::LLT<Matrix>(trial).info() == Eigen::Success) {
                factored = true;
                break;
            }
        }
        CHECK(factored);
    }
}

TEST_CASE("duplicate rows with zero nugget are rejected") {
    Design d;
    d.points.resize(3, 1);
    d.points << 0.4, 0.4, 0.9;
    d.outputs.resize(3, 1);
    d.outputs << 1.0, 1.0, 2.0;
    CHECK_THROWS_AS(
        fit_emulator(d, 0, BasisSpec::constant(1),
                     spec_1d(CorrelationFamily::PowerExponential, 2.0, 2.0, 0.0)),
        NumericalError);
}

TEST_CASE("log marginal posterior matches the dense oracle on a 4-point case") {
    Design d;
    d.points.resize(4, 1);
    d.points << 0.1, 0.35, 0.6, 0.9;
    d.outputs.resize(4, 1);
    d.outputs << 0.3, 1.1, 0.8, -0.2;
    const BasisSpec basis = BasisSpec::constant(1);
    const HyperPriors priors = HyperPriors::defaults(1);

    Rng rng = make_rng(39);
    std::uniform_real_distribution<double> kappaDist(0.5, 20.0);
    std::uniform_real_distribution<double> nuDist(0.05, 0.9);
    for (int rep = 0; rep < 10; ++rep) {
        const Vector kappa = Vector::Constant(1, kappaDist(rng));
        const double nu = nuDist(rng);
        for (auto family : {CorrelationFamily::PowerExponential,
                            CorrelationFamily::Matern32, CorrelationFamily::Matern52}) {
            const double viaImpl =
                log_marginal_posterior(kappa, nu, d, 0, basis, priors, family, 1.9);
            const double viaOracle =
                oracle_log_marginal(kappa, nu, d, basis, priors, family, 1.9);
            CHECK(std::abs(viaImpl - viaOracle) < 1e-6);
        }
    }
}

TEST_CASE("log marginal posterior: singular limit with duplicated rows") {
    Design d;
    d.points.resize(3, 1);
    d.points << 0.4, 0.4, 0.9;
    d.outputs.resize(3, 1);
    d.outputs << 1.0, 1.2, 2.0;
    auto value = [&](double nu) {
        return log_marginal_posterior(Vector::Constant(1, 3.0), nu, d, 0,
                                      BasisSpec::constant(1), HyperPriors::defaults(1),
                                      CorrelationFamily::PowerExponential, 2.0);
    };
    // Monotone penalty towards the singular limit, -infinity once the
    // correlation matrix degenerates.
    CHECK(value(1e-6) > value(1e-10));
    CHECK(value(1e-10) > value(1e-14));
    CHECK(value(1e-18) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("MAP search: flat likelihood settles at the prior modes") {
    // Constant outputs carry no information about (kappa, nu): the posterior
    // is the prior, whose nu mode the annealer must find.
    Design d;
    d.points.resize(6, 1);
    for (int i = 0; i < 6; ++i) d.points(i, 0) = (i + 0.5) / 6.0;
    d.outputs = Matrix::Constant(6, 1, 2.5);

    HyperPriors priors = HyperPriors::defaults(1);
    priors.nuBeta = BetaPrior{3.0, 2.0};  // mode (3-1)/(3+2-2) = 2/3

    AnnealConfig cfg;
    cfg.seed = 99;
    const MapEstimate est =
        map_hyperparameters(d, 0, BasisSpec::constant(1), priors, cfg,
                            CorrelationFamily::PowerExponential, 2.0);

    // 1-D grid oracle over nu with everything else at the start point.
    double bestNu = 0.0;
    double bestValue = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < 400; ++i) {
        const double nu = i / 400.0;
        const double v = priors.nuBeta.log_pdf(nu);
        if (v > bestValue) {
            bestValue = v;
            bestNu = nu;
        }
    }
    CHECK(std::abs(bestNu - 2.0 / 3.0) < 0.01);
    CHECK(std::abs(est.nu - bestNu) < 0.05);

    // kappa settles at the half-length prior mode under the flat likelihood.
    const double rhoHat =
        kappa_to_half_length(est.kappa[0], CorrelationFamily::PowerExponential, 2.0, 0.5);
    CHECK(std::abs(rhoHat - priors.kappaBeta[0].mode()) < 0.05);
}

TEST_CASE("MAP search: recovers a known roughness within the grid posterior band") {
    // Draw a 1-D response from a GP with known kappa*, then check the MAP
    // lands inside the central 95% band of a dense-grid posterior.
    Rng rng = make_rng(41);
    const int n = 25;
    Design d;
    d.points.resize(n, 1);
    for (int i = 0; i < n; ++i) d.points(i, 0) = (i + 0.5) / n;
    const double kappaTrue = 12.0;
    const double nuTrue = 0.05;
    CorrelationSpec gen = spec_1d(CorrelationFamily::PowerExponential, 2.0, kappaTrue, nuTrue);
    Matrix cov = correlation_matrix(d.points, gen);
    cov.diagonal().array() += 1e-10;
    Eigen::LLT<Matrix> llt(cov);
    REQUIRE(llt.info() == Eigen::Success);
    const Vector u = random_vector(rng, n);
    const Matrix lower = llt.matrixL();
    d.outputs.resize(n, 1);
    d.outputs.col(0) = lower * u;

    const BasisSpec basis = BasisSpec::constant(1);
    const HyperPriors priors = HyperPriors::defaults(1);
    AnnealConfig cfg;
    cfg.seed = 7;
    cfg.iterations = 4000;
    const MapEstimate est = map_hyperparameters(d, 0, basis, priors, cfg,
                                                CorrelationFamily::PowerExponential, 2.0);

    // Dense grid posterior over (rho, nu) in half-length space.
    const int gRho = 80, gNu = 40;
    Matrix logPost(gRho, gNu);
    double maxLog = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < gRho; ++i) {
        const double rho = (i + 0.5) / gRho;
        const double kappa =
            half_length_to_kappa(rho, CorrelationFamily::PowerExponential, 2.0, 0.5);
        for (int j = 0; j < gNu; ++j) {
            const double nu = (j + 0.5) / gNu;
            const double v =
                log_marginal_posterior(Vector::Constant(1, kappa), nu, d, 0, basis,
                                       priors, CorrelationFamily::PowerExponential, 2.0);
            logPost(i, j) = v;
            maxLog = std::max(maxLog, v);
        }
    }
    Vector rhoMarginal = Vector::Zero(gRho);
    for (int i = 0; i < gRho; ++i) {
        for (int j = 0; j < gNu; ++j) {
            rhoMarginal[i] += std::exp(logPost(i, j) - maxLog);
        }
    }
    rhoMarginal /= rhoMarginal.sum();
    double cum = 0.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < gRho; ++i) {
        const double next = cum + rhoMarginal[i];
        if (cum < 0.025 && next >= 0.025) lo = static_cast<double>(i) / gRho;
        if (cum < 0.975 && next >= 0.975) hi = (i + 1.0) / gRho;
        cum = next;
    }
    const double rhoHat =
        kappa_to_half_length(est.kappa[0], CorrelationFamily::PowerExponential, 2.0, 0.5);
    CHECK(rhoHat >= lo);
    CHECK(rhoHat <= hi);
}

TEST_CASE("MAP search is deterministic given the seed") {
    Design d;
    d.points.resize(8, 1);
    for (int i = 0; i < 8; ++i) d.points(i, 0) = (i + 0.5) / 8.0;
    d.outputs.resize(8, 1);
    for (int i = 0; i < 8; ++i) d.outputs(i, 0) = std::sin(5.0 * d.points(i, 0));
    AnnealConfig cfg;
    cfg.seed = 1234;
    cfg.iterations = 500;
    const HyperPriors priors = HyperPriors::defaults(1);
    const MapEstimate a = map_hyperparameters(d, 0, BasisSpec::constant(1), priors, cfg);
    const MapEstimate b = map_hyperparameters(d, 0, BasisSpec::constant(1), priors, cfg);
    CHECK(a.nu == b.nu);
    CHECK(a.kappa[0] == b.kappa[0]);
    CHECK(a.objective == b.objective);
}

TEST_CASE("MAP search never returns a worse objective than the start") {
    Rng rng = make_rng(42);
    Design d;
    d.points.resize(10, 2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        d.points(i, 0) = unif(rng);
        d.points(i, 1) = unif(rng);
    }
    d.outputs.resize(10, 1);
    for (int i = 0; i < 10; ++i) {
        d.outputs(i, 0) = d.points(i, 0) + std::sin(4.0 * d.points(i, 1));
    }
    const HyperPriors priors = HyperPriors::defaults(2);
    const BasisSpec basis = BasisSpec::constant(2);
    AnnealConfig cfg;
    cfg.seed = 5;
    cfg.iterations = 300;

    Vector kappa0(2);
    for (int i = 0; i < 2; ++i) {
        kappa0[i] = half_length_to_kappa(std::clamp(priors.kappaBeta[0].mode(), 1e-3, 0.999),
                                         CorrelationFamily::PowerExponential, 2.0, 0.5);
    }
    const double startValue = log_marginal_posterior(
        kappa0, std::clamp(priors.nuBeta.mode(), 1e-3, 0.999), d, 0, basis, priors);
    const MapEstimate est = map_hyperparameters(d, 0, basis, priors, cfg);
    CHECK(est.objective >= startValue - 1e-12);
}

TEST_CASE("nugget scenario table uses left-closed brackets") {
    const HyperPriors hp = HyperPriors::defaults(1);
    CHECK(hp.nu_prior_for(0.97).a == doctest::Approx(3.8));
    CHECK(hp.nu_prior_for(0.95).a == doctest::Approx(3.8));
    CHECK(hp.nu_prior_for(0.93).a == doctest::Approx(2.3));
    CHECK(hp.nu_prior_for(0.75).a == doctest::Approx(1.5));
    CHECK(hp.nu_prior_for(0.45).a == doctest::Approx(1.8));
    CHECK(hp.nu_prior_for(0.2).a == doctest::Approx(1.4));
}
