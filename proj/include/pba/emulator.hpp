#pragma once

#include "pba/linalg.hpp"
#include "pba/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pba {

// ---------------------------------------------------------------------------
// Correlation families
// ---------------------------------------------------------------------------

enum class CorrelationFamily { PowerExponential, Matern32, Matern52 };

// Product-form correlation over input dimensions. The full covariance entry is
// sigma_f^2 * (nu * 1{x=x'} + (1 - nu) * R(|x - x'|; kappa)).
struct CorrelationSpec {
    CorrelationFamily family = CorrelationFamily::PowerExponential;
    double power = 2.0;  // p in (0, 2]; only used by PowerExponential
    Vector kappa;        // per-dimension roughness, > 0
    double nugget = 0.0; // nu in [0, 1]

    void validate() const;
};

// One-dimensional family form at distance h >= 0.
double correlation_1d(CorrelationFamily family, double power, double kappa, double h);

// Derivative of correlation_1d with respect to kappa (used for the
// half-length prior density transform).
double correlation_1d_dkappa(CorrelationFamily family, double power, double kappa,
                             double h);

// Product correlation R(|x - x2|) between two points (no nugget).
double correlation(const Vector& x, const Vector& x2, const CorrelationSpec& spec);

// n x n matrix with entries nu * 1{i=j} + (1 - nu) * R(x_i, x_j); unit diagonal.
Matrix correlation_matrix(const Matrix& points, const CorrelationSpec& spec);

// Solves R_1d(halfRange; kappa) = rho for kappa (closed form for the power
// exponential family, bracketed bisection for the Matern forms).
double half_length_to_kappa(double rho, CorrelationFamily family, double power,
                            double halfRange);
double kappa_to_half_length(double kappa, CorrelationFamily family, double power,
                            double halfRange);

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

// An ensemble of simulator runs with inputs normalized to [0,1]^r and one
// output column per output index (depth).
struct Design {
    Matrix points;   // n x r
    Matrix outputs;  // n x nOutputs

    Eigen::Index n() const { return points.rows(); }
    Eigen::Index dims() const { return points.cols(); }

    void validate() const;
    bool has_duplicate_rows(double tol = 1e-12) const;

    // Normalizes raw coordinates to [0,1] per dimension from elicited ranges.
    static Design from_raw(const Matrix& rawPoints, const Vector& lower,
                           const Vector& upper, const Matrix& outputs);
};

// ---------------------------------------------------------------------------
// Response-surface basis
// ---------------------------------------------------------------------------

enum class BasisPolicyKind { Constant, LinearAll, Stepwise };

struct BasisPolicy {
    BasisPolicyKind kind = BasisPolicyKind::Stepwise;
    double dfFraction = 0.10;       // share of degrees of freedom spent on terms
    double deleteThreshold = 0.001; // minimum share of output variance per term
};

// Monomial basis: each term is a vector of per-dimension exponents; the
// constant term (all zeros) is always present and first.
struct BasisSpec {
    std::vector<std::vector<int>> terms;

    Eigen::Index size() const { return static_cast<Eigen::Index>(terms.size()); }
    static BasisSpec constant(Eigen::Index dims);
    static BasisSpec linear_all(Eigen::Index dims);
    std::string describe() const;
};

Vector evaluate_basis(const BasisSpec& basis, const Vector& x);
Matrix basis_matrix(const BasisSpec& basis, const Matrix& points);

struct BasisSelection {
    BasisSpec basis;
    double olsR2 = 0.0;  // R^2 of the final OLS fit, for the nugget scenario
};

// Selects the response-surface terms for one output column. Stepwise selection
// forward-adds the candidate monomial (powers up to 3 plus pairwise
// interactions) that most reduces the residual sum of squares until the
// degrees-of-freedom budget is exhausted, then backward-deletes terms whose
// contribution is below deleteThreshold of the output variance.
BasisSelection select_basis(const Design& design, Eigen::Index outputIndex,
                            const BasisPolicy& policy);

// ---------------------------------------------------------------------------
// Hyperpriors
// ---------------------------------------------------------------------------

struct BetaPrior {
    double a = 1.0;
    double b = 1.0;

    double mean() const { return a / (a + b); }
    // Interior mode, clamped away from {0,1} when the density is unbounded.
    double mode() const;
    double log_pdf(double x) const;
    // Same prior mean, variance scaled down by multiplying both parameters.
    BetaPrior scaled(double multiplier) const { return {a * multiplier, b * multiplier}; }
};

struct NuggetScenario {
    double r2Threshold;  // left-closed: applies when R^2 >= threshold
    BetaPrior prior;
};

struct HyperPriors {
    std::vector<BetaPrior> kappaBeta;       // per-dimension prior on the half-length correlation
    BetaPrior nuBeta{1.0, 1.0};             // selected by R^2 scenario
    std::vector<NuggetScenario> scenarioTable;
    double halfRange = 0.5;                 // half of the normalized input range

    void validate() const;
    static std::vector<NuggetScenario> default_scenario_table();
    static HyperPriors defaults(Eigen::Index dims);
    // Picks nuBeta from the scenario table for the given OLS R^2.
    BetaPrior nu_prior_for(double r2) const;
};

// ---------------------------------------------------------------------------
// Conjugate fit under the reference prior pi(beta, sigma^2) ~ 1/sigma^2
// ---------------------------------------------------------------------------

struct EmulatorPosterior {
    BasisSpec basis;
    CorrelationSpec corr;
    Vector betaHat;
    double sigmaHatSq = 0.0;   // residual quadratic form / (dof - 2); NaN if dof <= 2
    Eigen::Index dof = 0;      // n - |terms|
    double jitter = 0.0;       // diagonal jitter applied by the ladder

    // Fit state reused by prediction.
    Matrix trainPoints;
    Matrix corrWithNugget;     // the factorized matrix (including jitter)
    Eigen::LLT<Matrix> chol;
    Vector residWeights;       // A^-1 (F - X betaHat)
    Matrix ainvX;              // A^-1 X
    Matrix xtAinvXInv;         // (X' A^-1 X)^-1

    bool has_proper_variance() const { return dof > 2; }
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

EmulatorPosterior fit_emulator(const Design& design, Eigen::Index outputIndex,
                               const BasisSpec& basis, const CorrelationSpec& corr);

Prediction predict(const EmulatorPosterior& em, const Vector& x);
double predict_mean(const EmulatorPosterior& em, const Vector& x);

// ---------------------------------------------------------------------------
// MAP hyperparameter search
// ---------------------------------------------------------------------------

// Log marginal posterior of (kappa, nu): reference-prior marginal likelihood
// of the output column plus the Beta prior log densities (half-length
// transform for kappa). Returns -infinity on conditioning failure so it is
// safe inside the annealer.
double log_marginal_posterior(const Vector& kappa, double nu, const Design& design,
                              Eigen::Index outputIndex, const BasisSpec& basis,
                              const HyperPriors& priors,
                              CorrelationFamily family = CorrelationFamily::PowerExponential,
                              double power = 2.0);

struct AnnealConfig {
    int iterations = 2000;
    double coolingRatio = 0.995;
    double proposalScale = 0.15;     // on logit-transformed coordinates
    double initialAcceptance = 0.6;  // early-move acceptance targeted by T0
    int calibrationSamples = 50;
    std::uint64_t seed = 0;
};

struct MapEstimate {
    Vector kappa;
    double nu = 0.0;
    double objective = 0.0;
};

// Simulated-annealing MAP search over (kappa, nu), run on logit-transformed
// half-length correlations. Starts from the prior modes, keeps the best state
// visited, and is deterministic given the seed.
MapEstimate map_hyperparameters(const Design& design, Eigen::Index outputIndex,
                                const BasisSpec& basis, const HyperPriors& priors,
                                const AnnealConfig& config,
                                CorrelationFamily family = CorrelationFamily::PowerExponential,
                                double power = 2.0);

}  // namespace pba
