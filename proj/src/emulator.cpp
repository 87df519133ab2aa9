#include "pba/emulator.hpp"

#include "pba/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pba {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);
}  // namespace

// ---------------------------------------------------------------------------
// Correlation families
// ---------------------------------------------------------------------------

void CorrelationSpec::validate() const {
    if (family == CorrelationFamily::PowerExponential &&
        (power <= 0.0 || power > 2.0)) {
        throw ArgumentError("CorrelationSpec: power must lie in (0, 2]");
    }
    if (kappa.size() == 0 || (kappa.array() <= 0.0).any()) {
        throw ArgumentError("CorrelationSpec: kappa must be positive in every dimension");
    }
    if (nugget < 0.0 || nugget > 1.0) {
        throw ArgumentError("CorrelationSpec: nugget must lie in [0, 1]");
    }
}

double correlation_1d(CorrelationFamily family, double power, double kappa, double h) {
    h = std::abs(h);
    switch (family) {
        case CorrelationFamily::PowerExponential:
            return std::exp(-kappa * std::pow(h, power));
        case CorrelationFamily::Matern32: {
            const double u = kSqrt3 * kappa * h;
            return (1.0 + u) * std::exp(-u);
        }
        case CorrelationFamily::Matern52: {
            const double u = kSqrt5 * kappa * h;
            return (1.0 + u + (kSqrt5 / 3.0) * kappa * h * h) * std::exp(-u);
        }
    }
    return 0.0;
}

double correlation_1d_dkappa(CorrelationFamily family, double power, double kappa,
                             double h) {
    h = std::abs(h);
    switch (family) {
        case CorrelationFamily::PowerExponential: {
            const double hp = std::pow(h, power);
            return -hp * std::exp(-kappa * hp);
        }
        case CorrelationFamily::Matern32: {
            const double u = kSqrt3 * kappa * h;
            return -3.0 * kappa * h * h * std::exp(-u);
        }
        case CorrelationFamily::Matern52: {
            const double u = kSqrt5 * kappa * h;
            const double v = (kSqrt5 / 3.0) * kappa * h * h;
            return std::exp(-u) * ((kSqrt5 / 3.0) * h * h - kSqrt5 * h * (u + v));
        }
    }
    return 0.0;
}

double correlation(const Vector& x, const Vector& x2, const CorrelationSpec& spec) {
    if (x.size() != x2.size() || x.size() != spec.kappa.size()) {
        throw ArgumentError("correlation: dimension mismatch");
    }
    double r = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        r *= correlation_1d(spec.family, spec.power, spec.kappa[i], x[i] - x2[i]);
    }
    return r;
}

Matrix correlation_matrix(const Matrix& points, const CorrelationSpec& spec) {
    const Eigen::Index n = points.rows();
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r =
                correlation(points.row(i).transpose(), points.row(j).transpose(), spec);
            const double v = (1.0 - spec.nugget) * r;
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

double kappa_to_half_length(double kappa, CorrelationFamily family, double power,
                            double halfRange) {
    return correlation_1d(family, power, kappa, halfRange);
}

double half_length_to_kappa(double rho, CorrelationFamily family, double power,
                            double halfRange) {
    if (halfRange <= 0.0) throw ArgumentError("half_length_to_kappa: halfRange must be > 0");
    if (rho <= 0.0) {
        throw ArgumentError("half_length_to_kappa: rho = 0 requires unbounded kappa");
    }
    if (rho >= 1.0) {
        throw ArgumentError(
            "half_length_to_kappa: rho must be < 1 for a proper spec (kappa must be > 0)");
    }
    if (family == CorrelationFamily::PowerExponential) {
        return -std::log(rho) / std::pow(halfRange, power);
    }
    // Matern forms: monotone decreasing in kappa, bracket then bisect.
    double lo = 0.0;
    double hi = 1.0;
    while (correlation_1d(family, power, hi, halfRange) > rho) {
        hi *= 2.0;
        if (hi > 1e12) throw NumericalError("half_length_to_kappa: bracket failure");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (correlation_1d(family, power, mid, halfRange) > rho) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

void Design::validate() const {
    if (points.rows() < 1) throw ArgumentError("Design: needs at least one point");
    if (outputs.rows() != points.rows()) {
        throw ArgumentError("Design: outputs must have one row per design point");
    }
    if (points.minCoeff() < -1e-12 || points.maxCoeff() > 1.0 + 1e-12) {
        throw ArgumentError("Design: coordinates must be normalized to [0, 1]");
    }
}

bool Design::has_duplicate_rows(double tol) const {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
            if ((points.row(i) - points.row(j)).cwiseAbs().maxCoeff() <= tol) return true;
        }
    }
    return false;
}

Design Design::from_raw(const Matrix& rawPoints, const Vector& lower,
                        const Vector& upper, const Matrix& outputs) {
    if (lower.size() != rawPoints.cols() || upper.size() != rawPoints.cols()) {
        throw ArgumentError("Design::from_raw: range dimensions do not match points");
    }
    Design d;
    d.points.resize(rawPoints.rows(), rawPoints.cols());
    for (Eigen::Index j = 0; j < rawPoints.cols(); ++j) {
        const double width = upper[j] - lower[j];
        if (width <= 0.0) throw ArgumentError("Design::from_raw: empty input range");
        d.points.col(j) = (rawPoints.col(j).array() - lower[j]) / width;
    }
    d.outputs = outputs;
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Basis
// ---------------------------------------------------------------------------

BasisSpec BasisSpec::constant(Eigen::Index dims) {
    BasisSpec b;
    b.terms.push_back(std::vector<int>(dims, 0));
    return b;
}

BasisSpec BasisSpec::linear_all(Eigen::Index dims) {
    BasisSpec b = constant(dims);
    for (Eigen::Index i = 0; i < dims; ++i) {
        std::vector<int> t(dims, 0);
        t[i] = 1;
        b.terms.push_back(t);
    }
    return b;
}

std::string BasisSpec::describe() const {
    std::ostringstream os;
    bool firstTerm = true;
    for (const auto& t : terms) {
        if (!firstTerm) os << " + ";
        firstTerm = false;
        bool any = false;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] > 0) {
                if (any) os << "*";
                os << "x" << (i + 1);
                if (t[i] > 1) os << "^" << t[i];
                any = true;
            }
        }
        if (!any) os << "1";
    }
    return os.str();
}

Vector evaluate_basis(const BasisSpec& basis, const Vector& x) {
    Vector g(basis.size());
    for (Eigen::Index t = 0; t < basis.size(); ++t) {
        double v = 1.0;
        const auto& powers = basis.terms[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < powers.size(); ++i) {
            for (int rep = 0; rep < powers[i]; ++rep) v *= x[static_cast<Eigen::Index>(i)];
        }
        g[t] = v;
    }
    return g;
}

Matrix basis_matrix(const BasisSpec& basis, const Matrix& points) {
    Matrix x(points.rows(), basis.size());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        x.row(i) = evaluate_basis(basis, points.row(i).transpose()).transpose();
    }
    return x;
}

namespace {

double ols_rss(const Matrix& x, const Vector& y) {
    const Vector beta = x.colPivHouseholderQr().solve(y);
    return (y - x * beta).squaredNorm();
}

std::vector<std::vector<int>> stepwise_candidates(Eigen::Index dims) {
    std::vector<std::vector<int>> cands;
    for (Eigen::Index i = 0; i < dims; ++i) {
        for (int power = 1; power <= 3; ++power) {
            std::vector<int> t(dims, 0);
            t[i] = power;
            cands.push_back(t);
        }
    }
    for (Eigen::Index i = 0; i < dims; ++i) {
        for (Eigen::Index j = i + 1; j < dims; ++j) {
            std::vector<int> t(dims, 0);
            t[i] = 1;
            t[j] = 1;
            cands.push_back(t);
        }
    }
    return cands;
}

}  // namespace

BasisSelection select_basis(const Design& design, Eigen::Index outputIndex,
                            const BasisPolicy& policy) {
    design.validate();
    if (outputIndex < 0 || outputIndex >= design.outputs.cols()) {
        throw ArgumentError("select_basis: output index out of range");
    }
    const Eigen::Index n = design.n();
    const Eigen::Index r = design.dims();
    const Vector y = design.outputs.col(outputIndex);

    BasisSelection sel;
    if (policy.kind == BasisPolicyKind::Constant) {
        sel.basis = BasisSpec::constant(r);
    } else if (policy.kind == BasisPolicyKind::LinearAll) {
        sel.basis = BasisSpec::linear_all(r);
    } else {
        if (n <= 2) throw ArgumentError("select_basis: stepwise needs n > 2");
        const Eigen::Index maxTerms =
            static_cast<Eigen::Index>(std::floor(policy.dfFraction * static_cast<double>(n)));
        if (maxTerms < 2) {
            throw ArgumentError(
                "select_basis: degrees-of-freedom budget below one non-constant term");
        }
        const double tss = (y.array() - y.mean()).square().sum();
        BasisSpec current = BasisSpec::constant(r);
        std::vector<std::vector<int>> pool = stepwise_candidates(r);
        double rss = ols_rss(basis_matrix(current, design.points), y);

        // Forward phase: greedy RSS reduction up to the budget.
        while (current.size() < maxTerms && !pool.empty()) {
            double bestRss = rss;
            std::size_t bestIdx = pool.size();
            for (std::size_t c = 0; c < pool.size(); ++c) {
                BasisSpec trial = current;
                trial.terms.push_back(pool[c]);
                if (trial.size() >= n) continue;
                const double tryRss = ols_rss(basis_matrix(trial, design.points), y);
                if (tryRss < bestRss - 1e-12 * std::max(tss, 1.0)) {
                    bestRss = tryRss;
                    bestIdx = c;
                }
            }
            if (bestIdx == pool.size()) break;
            current.terms.push_back(pool[bestIdx]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bestIdx));
            rss = bestRss;
        }

        // Backward phase: delete the weakest term while it explains less than
        // the threshold share of the output variance.
        while (current.size() > 1) {
            double minContribution = kInf;
            Eigen::Index weakest = -1;
            for (Eigen::Index t = 1; t < current.size(); ++t) {
                BasisSpec trial = current;
                trial.terms.erase(trial.terms.begin() + t);
                const double without = ols_rss(basis_matrix(trial, design.points), y);
                const double contribution = without - rss;
                if (contribution < minContribution) {
                    minContribution = contribution;
                    weakest = t;
                }
            }
            if (weakest < 0 || minContribution >= policy.deleteThreshold * tss) break;
            current.terms.erase(current.terms.begin() + weakest);
            rss = ols_rss(basis_matrix(current, design.points), y);
        }
        sel.basis = current;
    }

    const double tss = (y.array() - y.mean()).square().sum();
    const double rssFinal = ols_rss(basis_matrix(sel.basis, design.points), y);
    sel.olsR2 = tss > 0.0 ? std::clamp(1.0 - rssFinal / tss, 0.0, 1.0) : 1.0;
    return sel;
}

// ---------------------------------------------------------------------------
// Hyperpriors
// ---------------------------------------------------------------------------

double BetaPrior::mode() const {
    if (a > 1.0 && b > 1.0) return (a - 1.0) / (a + b - 2.0);
    if (a <= 1.0 && b > 1.0) return 1e-3;
    if (a > 1.0 && b <= 1.0) return 1.0 - 1e-3;
    return mean();
}

double BetaPrior::log_pdf(double x) const {
    if (x <= 0.0 || x >= 1.0) return -kInf;
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) -
           std::lgamma(a) - std::lgamma(b);
}

std::vector<NuggetScenario> HyperPriors::default_scenario_table() {
    return {
        {0.95, {3.8, 1.7}}, {0.90, {2.3, 1.7}}, {0.80, {2.0, 1.5}},
        {0.70, {1.5, 1.5}}, {0.60, {1.6, 2.1}}, {0.40, {1.8, 3.8}},
        {-kInf, {1.4, 3.1}},
    };
}

HyperPriors HyperPriors::defaults(Eigen::Index dims) {
    HyperPriors hp;
    hp.kappaBeta.assign(static_cast<std::size_t>(dims), BetaPrior{2.9, 5.0});
    hp.scenarioTable = default_scenario_table();
    hp.nuBeta = hp.scenarioTable.back().prior;
    return hp;
}

void HyperPriors::validate() const {
    for (const BetaPrior& p : kappaBeta) {
        if (p.a <= 0.0 || p.b <= 0.0) throw ArgumentError("HyperPriors: Beta parameters must be > 0");
    }
    if (nuBeta.a <= 0.0 || nuBeta.b <= 0.0) {
        throw ArgumentError("HyperPriors: Beta parameters must be > 0");
    }
    if (halfRange <= 0.0) throw ArgumentError("HyperPriors: halfRange must be > 0");
}

BetaPrior HyperPriors::nu_prior_for(double r2) const {
    for (const NuggetScenario& s : scenarioTable) {
        if (r2 >= s.r2Threshold) return s.prior;
    }
    return scenarioTable.back().prior;
}

// ---------------------------------------------------------------------------
// Conjugate fit
// ---------------------------------------------------------------------------

namespace {

// Jitter ladder on the unit diagonal; returns the factorization and the
// jitter that succeeded.
struct CholResult {
    Eigen::LLT<Matrix> llt;
    Matrix matrix;
    double jitter = 0.0;
    bool ok = false;
};

CholResult cholesky_with_jitter(Matrix a) {
    static const double ladder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    CholResult res;
    for (double j : ladder) {
        Matrix trial = a;
        trial.diagonal().array() += j;
        Eigen::LLT<Matrix> llt(trial);
        if (llt.info() == Eigen::Success) {
            res.llt = llt;
            res.matrix = std::move(trial);
            res.jitter = j;
            res.ok = true;
            return res;
        }
    }
    return res;
}

}  // namespace

EmulatorPosterior fit_emulator(const Design& design, Eigen::Index outputIndex,
                               const BasisSpec& basis, const CorrelationSpec& corr) {
    design.validate();
    corr.validate();
    if (outputIndex < 0 || outputIndex >= design.outputs.cols()) {
        throw ArgumentError("fit_emulator: output index out of range");
    }
    if (corr.kappa.size() != design.dims()) {
        throw ArgumentError("fit_emulator: kappa dimension does not match design");
    }
    const Eigen::Index n = design.n();
    const Eigen::Index q = basis.size();
    if (n - q < 1) throw ArgumentError("fit_emulator: needs dof = n - |terms| >= 1");
    if (corr.nugget == 0.0 && design.has_duplicate_rows()) {
        throw NumericalError("fit_emulator: duplicate design rows require a positive nugget");
    }

    const Vector f = design.outputs.col(outputIndex);
    const Matrix x = basis_matrix(basis, design.points);

    // Collinearity check on the basis matrix itself.
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) {
        std::ostringstream os;
        os << "fit_emulator: collinear basis, dependent term(s):";
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < q; ++i) {
            BasisSpec one;
            one.terms.push_back(basis.terms[static_cast<std::size_t>(perm[i])]);
            os << " " << one.describe();
        }
        throw NumericalError(os.str());
    }

    CholResult chol = cholesky_with_jitter(correlation_matrix(design.points, corr));
    if (!chol.ok) {
        throw NumericalError("fit_emulator: correlation matrix not PSD after jitter ladder");
    }

    EmulatorPosterior em;
    em.basis = basis;
    em.corr = corr;
    em.dof = n - q;
    em.jitter = chol.jitter;
    em.trainPoints = design.points;
    em.corrWithNugget = chol.matrix;
    em.chol = chol.llt;
    em.ainvX = chol.llt.solve(x);

    const Matrix xtAinvX = x.transpose() * em.ainvX;
    Eigen::LLT<Matrix> gram(xtAinvX);
    if (gram.info() != Eigen::Success) {
        throw NumericalError("fit_emulator: normal equations are singular (collinear basis)");
    }
    em.xtAinvXInv = gram.solve(Matrix::Identity(q, q));
    em.betaHat = em.xtAinvXInv * (em.ainvX.transpose() * f);

    const Vector resid = f - x * em.betaHat;
    em.residWeights = chol.llt.solve(resid);
    const double quadForm = resid.dot(em.residWeights);
    em.sigmaHatSq = em.dof > 2 ? quadForm / static_cast<double>(em.dof - 2)
                               : std::numeric_limits<double>::quiet_NaN();
    return em;
}

namespace {

Vector cross_correlation(const EmulatorPosterior& em, const Vector& x) {
    const Eigen::Index n = em.trainPoints.rows();
    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector xi = em.trainPoints.row(i).transpose();
        double r = correlation(x, xi, em.corr);
        double v = (1.0 - em.corr.nugget) * r;
        if ((x - xi).cwiseAbs().maxCoeff() <= 1e-12) v += em.corr.nugget;
        t[i] = v;
    }
    return t;
}

}  // namespace

double predict_mean(const EmulatorPosterior& em, const Vector& x) {
    if (x.size() != em.trainPoints.cols()) {
        throw ArgumentError("predict: point dimension does not match design");
    }
    const Vector t = cross_correlation(em, x);
    const Vector g = evaluate_basis(em.basis, x);
    return g.dot(em.betaHat) + t.dot(em.residWeights);
}

Prediction predict(const EmulatorPosterior& em, const Vector& x) {
    if (x.size() != em.trainPoints.cols()) {
        throw ArgumentError("predict: point dimension does not match design");
    }
    if (!em.has_proper_variance()) {
        throw NumericalError("predict: predictive variance undefined for dof <= 2");
    }
    const Vector t = cross_correlation(em, x);
    const Vector g = evaluate_basis(em.basis, x);
    const Vector u = em.chol.solve(t);
    const Vector h = g - em.ainvX.transpose() * t;
    Prediction p;
    p.mean = g.dot(em.betaHat) + t.dot(em.residWeights);
    const double cstar = 1.0 - t.dot(u) + h.dot(em.xtAinvXInv * h);
    p.variance = std::max(0.0, em.sigmaHatSq * cstar);
    return p;
}

// ---------------------------------------------------------------------------
// MAP hyperparameter search
// ---------------------------------------------------------------------------

double log_marginal_posterior(const Vector& kappa, double nu, const Design& design,
                              Eigen::Index outputIndex, const BasisSpec& basis,
                              const HyperPriors& priors, CorrelationFamily family,
                              double power) {
    priors.validate();
    if ((kappa.array() <= 0.0).any() || nu <= 0.0 || nu >= 1.0) return -kInf;
    if (kappa.size() != design.dims() ||
        static_cast<Eigen::Index>(priors.kappaBeta.size()) != design.dims()) {
        throw ArgumentError("log_marginal_posterior: dimension mismatch");
    }
    const Eigen::Index n = design.n();
    const Eigen::Index q = basis.size();
    if (n - q < 1) return -kInf;

    CorrelationSpec spec;
    spec.family = family;
    spec.power = power;
    spec.kappa = kappa;
    spec.nugget = nu;

    // Strict factorization: a singular correlation (e.g. duplicated rows with
    // a vanishing nugget) is a hard -infinity for the annealer, not a jitter
    // candidate. The objective must not silently change with the ladder.
    Eigen::LLT<Matrix> llt(correlation_matrix(design.points, spec));
    if (llt.info() != Eigen::Success) return -kInf;

    const Vector f = design.outputs.col(outputIndex);
    const Matrix x = basis_matrix(basis, design.points);
    const Matrix ainvX = llt.solve(x);
    const Matrix xtAinvX = x.transpose() * ainvX;
    Eigen::LLT<Matrix> gram(xtAinvX);
    if (gram.info() != Eigen::Success) return -kInf;

    const Vector betaHat = gram.solve(ainvX.transpose() * f);
    const Vector resid = f - x * betaHat;
    const double quadForm = resid.dot(llt.solve(resid));

    double logLik = 0.0;
    if (quadForm > 1e-12 * std::max(1.0, f.squaredNorm())) {
        double logDetA = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            logDetA += 2.0 * std::log(llt.matrixLLT()(i, i));
        }
        double logDetGram = 0.0;
        for (Eigen::Index i = 0; i < q; ++i) {
            logDetGram += 2.0 * std::log(gram.matrixLLT()(i, i));
        }
        const double half = 0.5 * static_cast<double>(n - q);
        logLik = -half * std::log(2.0 * M_PI) - 0.5 * logDetA - 0.5 * logDetGram +
                 std::lgamma(half) - half * std::log(0.5 * quadForm);
    }
    // else: residuals are degenerate (outputs inside the basis span); the
    // marginal carries no information about (kappa, nu) and only the prior
    // terms remain.

    // Prior terms on the elicitation scale: each kappa maps to its
    // half-length correlation and the Beta density is evaluated there, so a
    // flat likelihood leaves the MAP at the elicited Beta modes.
    double logPrior = priors.nuBeta.log_pdf(nu);
    for (Eigen::Index i = 0; i < kappa.size(); ++i) {
        const double rho = correlation_1d(family, power, kappa[i], priors.halfRange);
        if (rho <= 0.0 || rho >= 1.0) return -kInf;
        logPrior += priors.kappaBeta[static_cast<std::size_t>(i)].log_pdf(rho);
    }
    const double value = logLik + logPrior;
    return std::isfinite(value) ? value : -kInf;
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

MapEstimate map_hyperparameters(const Design& design, Eigen::Index outputIndex,
                                const BasisSpec& basis, const HyperPriors& priors,
                                const AnnealConfig& config, CorrelationFamily family,
                                double power) {
    priors.validate();
    const Eigen::Index r = design.dims();

    // Search space: logit of the per-dimension half-length correlations and
    // of the nugget. Objective is the (kappa, nu)-space posterior density.
    auto unpack = [&](const Vector& z, Vector& kappa, double& nu) {
        kappa.resize(r);
        for (Eigen::Index i = 0; i < r; ++i) {
            const double rho = std::clamp(inv_logit(z[i]), 1e-12, 1.0 - 1e-12);
            kappa[i] = half_length_to_kappa(rho, family, power, priors.halfRange);
        }
        nu = std::clamp(inv_logit(z[r]), 1e-12, 1.0 - 1e-12);
    };
    auto objective = [&](const Vector& z) {
        Vector kappa;
        double nu;
        unpack(z, kappa, nu);
        return log_marginal_posterior(kappa, nu, design, outputIndex, basis, priors,
                                      family, power);
    };

    Vector z0(r + 1);
    for (Eigen::Index i = 0; i < r; ++i) {
        const double m = std::clamp(priors.kappaBeta[static_cast<std::size_t>(i)].mode(),
                                    1e-3, 1.0 - 1e-3);
        z0[i] = logit(m);
    }
    z0[r] = logit(std::clamp(priors.nuBeta.mode(), 1e-3, 1.0 - 1e-3));

    double value0 = objective(z0);
    if (!std::isfinite(value0)) {
        throw NumericalError("map_hyperparameters: objective not finite at the prior mode");
    }

    Rng rng = make_rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Calibrate the initial temperature so an average downhill move from the
    // start is accepted with probability initialAcceptance.
    double downhill = 0.0;
    int nDownhill = 0;
    for (int s = 0; s < config.calibrationSamples; ++s) {
        Vector z = z0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            z[i] += config.proposalScale * normal(rng);
        }
        const double v = objective(z);
        if (std::isfinite(v) && v < value0) {
            downhill += value0 - v;
            ++nDownhill;
        }
    }
    double temperature = 1.0;
    if (nDownhill > 0) {
        temperature = (downhill / nDownhill) / (-std::log(config.initialAcceptance));
    }

    Vector current = z0;
    double currentValue = value0;
    Vector best = z0;
    double bestValue = value0;

    for (int iter = 0; iter < config.iterations; ++iter) {
        Vector z = current;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            z[i] += config.proposalScale * normal(rng);
        }
        const double v = objective(z);
        const double delta = v - currentValue;
        if (std::isfinite(v) &&
            (delta >= 0.0 || unif(rng) < std::exp(delta / temperature))) {
            current = z;
            currentValue = v;
            if (v > bestValue) {
                best = z;
                bestValue = v;
            }
        }
        temperature *= config.coolingRatio;
    }

    MapEstimate est;
    unpack(best, est.kappa, est.nu);
    est.objective = bestValue;
    return est;
}

}  // namespace pba
