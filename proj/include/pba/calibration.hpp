#pragma once

#include "pba/emulator.hpp"
#include "pba/judgement.hpp"
#include "pba/mcmc.hpp"

#include <cstdint>
#include <vector>

namespace pba {

// Observations z(d) at a set of depths, with one held-out depth to predict.
struct ObservationModel {
    Vector observedDepths;                     // depth coordinates
    std::vector<Eigen::Index> observedColumns; // ensemble output column per depth
    double heldOutDepth = 0.0;
    Eigen::Index heldOutColumn = 0;
    Vector z;                                  // observed values
    double sigmaESq = 0.0;                     // known observation error variance

    Eigen::Index nObserved() const { return observedDepths.size(); }
    void validate() const;
};

// Hyperpriors on the discrepancy GP over depth: zeta ~ Gamma(aZeta, rate
// bZeta) controls the depth correlation exp(-zeta |d-d'|^2) and sigma_eta^2 ~
// InvGamma(aEta, scale bEta) its variance. The medium and high tiers divide
// (aEta, bEta) by 10 and 100, keeping the prior mean while widening and
// skewing the distribution.
struct DiscrepancyPrior {
    double aZeta = 1.0;
    double bZeta = 7.0;
    double aEta = 1000.0;
    double bEta = 6.8;
    DiscrepancyTier tier = DiscrepancyTier::Standard;

    void validate() const;
    double effective_a_eta() const;
    double effective_b_eta() const;
    double log_pdf_zeta(double zeta) const;
    double log_pdf_sigma_eta_sq(double s) const;
};

// One point of the calibration posterior.
struct CalibrationState {
    Vector xStar;          // in [0,1]^r
    double sigmaEtaSq = 0.0;
    double zeta = 0.0;

    // Flat layout used by the sampler: (x*_1..r, sigmaEtaSq, zeta).
    Vector flatten() const;
    static CalibrationState unflatten(const Vector& flat);
};

// Joint log posterior density of (x*, sigma_eta^2, zeta): multivariate normal
// likelihood of z with covariance diag(emulator variances) + sigma_eta^2 K +
// sigma_e^2 I, plus the prior densities. Out-of-support states return
// -infinity. Caches the emulator predictions at the current x* so single-site
// hyperparameter updates stay cheap.
class CalibrationDensity {
public:
    CalibrationDensity(const ObservationModel& model, const DiscrepancyPrior& prior,
                       const std::vector<EmulatorPosterior>* observedEmulators);

    double operator()(const Vector& flatState) const;
    double log_posterior(const CalibrationState& state) const;

private:
    const ObservationModel& model_;
    DiscrepancyPrior prior_;
    const std::vector<EmulatorPosterior>* emulators_;
    mutable Vector cachedX_;
    mutable Vector cachedMeans_;
    mutable Vector cachedVars_;

    void predictions_at(const Vector& xStar, Vector& means, Vector& vars) const;
};

double log_posterior(const CalibrationState& state, const ObservationModel& model,
                     const std::vector<EmulatorPosterior>& observedEmulators,
                     const DiscrepancyPrior& prior);

struct CalibrationChain {
    Matrix states;  // retained x (r + 2); columns x*_1..r, sigmaEtaSq, zeta
    double acceptanceRate = 0.0;
    Eigen::Index nRetained() const { return states.rows(); }
};

// Random walk Metropolis over (x*, sigma_eta^2, zeta) on transformed scales
// (logit for x*, log for the positives). Deterministic given config.seed.
CalibrationChain run_mcmc(const ObservationModel& model,
                          const std::vector<EmulatorPosterior>& observedEmulators,
                          const DiscrepancyPrior& prior, const McmcConfig& config);

struct PosteriorSummary {
    double expectation = 0.0;   // E[y(d5) | z; J]
    double variance = 0.0;      // posterior variance of y(d5)
    double mcse = 0.0;          // Monte Carlo standard error of the expectation
    double acceptanceRate = 0.0;
    Eigen::Index nRetained = 0;
    Eigen::Index nSkipped = 0;
    Vector perStateMeans;       // conditional mean of y(d5) per retained state
};

// Chain-averaged conditional mean of y at the held-out depth: emulator mean
// at (x*, d5) plus the discrepancy GP conditional mean given the residuals at
// the observed depths. States whose observation covariance fails to factorize
// are skipped; more than 10% skips is an error.
PosteriorSummary predict_held_out(const CalibrationChain& chain,
                                  const ObservationModel& model,
                                  const std::vector<EmulatorPosterior>& observedEmulators,
                                  const EmulatorPosterior& heldOutEmulator);

// ---------------------------------------------------------------------------
// Per-judgement pipeline
// ---------------------------------------------------------------------------

struct AnalysisConfig {
    HyperPriors basePriors;        // kappa Beta priors + nugget scenario table
    DiscrepancyPrior baseDiscrepancy;
    AnnealConfig anneal;
    McmcConfig mcmc;
    std::uint64_t seed = 0;
};

// Emulators depend only on the ensemble, so they are fitted once per
// judgement set and reused across data sets.
struct FittedJudgement {
    JudgementSet judgement;
    std::vector<EmulatorPosterior> observedEmulators;  // aligned with observedColumns
    EmulatorPosterior heldOutEmulator;
    DiscrepancyPrior discrepancy;
    std::vector<double> olsR2;  // per emulated column, observed first then held-out
};

FittedJudgement fit_judgement(const JudgementSet& judgement, const Design& ensemble,
                              const ObservationModel& model, const AnalysisConfig& config);

// Calibration + held-out prediction for already-fitted emulators.
PosteriorSummary calibrate_fitted(const FittedJudgement& fitted, const ObservationModel& model,
                                  const McmcConfig& mcmc, std::uint64_t seed);

// Full per-judgement analysis: basis selection, MAP hyperparameters by
// annealing, conjugate fits per depth, MCMC over (x*, sigma_eta^2, zeta) and
// the held-out prediction.
PosteriorSummary run_analysis(const JudgementSet& judgement, const ObservationModel& model,
                              const Design& ensemble, const AnalysisConfig& config);

}  // namespace pba
