#include "pba/calibration.hpp"

#include "pba/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace pba {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix depth_correlation(const Vector& depths, double zeta) {
    const Eigen::Index n = depths.size();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = depths[i] - depths[j];
            const double v = std::exp(-zeta * d * d);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace

void ObservationModel::validate() const {
    if (observedDepths.size() == 0) {
        throw ArgumentError("ObservationModel: needs at least one observed depth");
    }
    if (z.size() != observedDepths.size() ||
        static_cast<Eigen::Index>(observedColumns.size()) != observedDepths.size()) {
        throw ArgumentError("ObservationModel: z / column / depth sizes disagree");
    }
    if (sigmaESq < 0.0) throw ArgumentError("ObservationModel: sigmaESq must be >= 0");
    std::set<Eigen::Index> cols(observedColumns.begin(), observedColumns.end());
    if (cols.size() != observedColumns.size() || cols.count(heldOutColumn) > 0) {
        throw ArgumentError(
            "ObservationModel: observed and held-out output columns must be disjoint");
    }
}

void DiscrepancyPrior::validate() const {
    if (aZeta <= 0.0 || bZeta <= 0.0 || aEta <= 0.0 || bEta <= 0.0) {
        throw ArgumentError("DiscrepancyPrior: all hyperparameters must be > 0");
    }
}

double DiscrepancyPrior::effective_a_eta() const {
    switch (tier) {
        case DiscrepancyTier::Standard: return aEta;
        case DiscrepancyTier::Medium: return aEta / 10.0;
        case DiscrepancyTier::High: return aEta / 100.0;
    }
    return aEta;
}

double DiscrepancyPrior::effective_b_eta() const {
    switch (tier) {
        case DiscrepancyTier::Standard: return bEta;
        case DiscrepancyTier::Medium: return bEta / 10.0;
        case DiscrepancyTier::High: return bEta / 100.0;
    }
    return bEta;
}

double DiscrepancyPrior::log_pdf_zeta(double zeta) const {
    if (zeta <= 0.0) return -kInf;
    return aZeta * std::log(bZeta) - std::lgamma(aZeta) + (aZeta - 1.0) * std::log(zeta) -
           bZeta * zeta;
}

double DiscrepancyPrior::log_pdf_sigma_eta_sq(double s) const {
    if (s <= 0.0) return -kInf;
    const double a = effective_a_eta();
    const double b = effective_b_eta();
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(s) - b / s;
}

Vector CalibrationState::flatten() const {
    Vector flat(xStar.size() + 2);
    flat.head(xStar.size()) = xStar;
    flat[xStar.size()] = sigmaEtaSq;
    flat[xStar.size() + 1] = zeta;
    return flat;
}

CalibrationState CalibrationState::unflatten(const Vector& flat) {
    if (flat.size() < 3) throw ArgumentError("CalibrationState: flat state too short");
    CalibrationState s;
    s.xStar = flat.head(flat.size() - 2);
    s.sigmaEtaSq = flat[flat.size() - 2];
    s.zeta = flat[flat.size() - 1];
    return s;
}

CalibrationDensity::CalibrationDensity(const ObservationModel& model,
                                       const DiscrepancyPrior& prior,
                                       const std::vector<EmulatorPosterior>* observedEmulators)
    : model_(model), prior_(prior), emulators_(observedEmulators) {
    model_.validate();
    prior_.validate();
    if (!emulators_ ||
        static_cast<Eigen::Index>(emulators_->size()) != model_.nObserved()) {
        throw ArgumentError("CalibrationDensity: one emulator per observed depth required");
    }
}

void CalibrationDensity::predictions_at(const Vector& xStar, Vector& means,
                                        Vector& vars) const {
    if (cachedX_.size() == xStar.size() && (cachedX_ - xStar).cwiseAbs().maxCoeff() == 0.0) {
        means = cachedMeans_;
        vars = cachedVars_;
        return;
    }
    const Eigen::Index n = model_.nObserved();
    means.resize(n);
    vars.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Prediction p = predict((*emulators_)[static_cast<std::size_t>(i)], xStar);
        means[i] = p.mean;
        vars[i] = p.variance;
    }
    cachedX_ = xStar;
    cachedMeans_ = means;
    cachedVars_ = vars;
}

double CalibrationDensity::log_posterior(const CalibrationState& state) const {
    if (state.sigmaEtaSq <= 0.0 || state.zeta <= 0.0) return -kInf;
    if (state.xStar.minCoeff() < 0.0 || state.xStar.maxCoeff() > 1.0) return -kInf;

    Vector means, vars;
    predictions_at(state.xStar, means, vars);

    const Eigen::Index n = model_.nObserved();
    Matrix cov = state.sigmaEtaSq * depth_correlation(model_.observedDepths, state.zeta);
    cov.diagonal() += vars;
    cov.diagonal().array() += model_.sigmaESq;

    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) return -kInf;

    const Vector resid = model_.z - means;
    double logDet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logDet += 2.0 * std::log(llt.matrixLLT()(i, i));
    const double quad = resid.dot(llt.solve(resid));
    const double logLik =
        -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logDet + quad);

    const double value = logLik + prior_.log_pdf_zeta(state.zeta) +
                         prior_.log_pdf_sigma_eta_sq(state.sigmaEtaSq);
    return std::isfinite(value) ? value : -kInf;
}

double CalibrationDensity::operator()(const Vector& flatState) const {
    return log_posterior(CalibrationState::unflatten(flatState));
}

double log_posterior(const CalibrationState& state, const ObservationModel& model,
                     const std::vector<EmulatorPosterior>& observedEmulators,
                     const DiscrepancyPrior& prior) {
    CalibrationDensity density(model, prior, &observedEmulators);
    return density.log_posterior(state);
}

CalibrationChain run_mcmc(const ObservationModel& model,
                          const std::vector<EmulatorPosterior>& observedEmulators,
                          const DiscrepancyPrior& prior, const McmcConfig& config) {
    CalibrationDensity density(model, prior, &observedEmulators);
    const Eigen::Index r = observedEmulators.front().trainPoints.cols();

    std::vector<CoordinateTransform> transforms(
        static_cast<std::size_t>(r), CoordinateTransform::Logit);
    transforms.push_back(CoordinateTransform::Log);  // sigmaEtaSq
    transforms.push_back(CoordinateTransform::Log);  // zeta

    // Start at the input-space centre and the discrepancy prior means.
    CalibrationState init;
    init.xStar = Vector::Constant(r, 0.5);
    const double aEta = prior.effective_a_eta();
    const double bEta = prior.effective_b_eta();
    init.sigmaEtaSq = aEta > 1.0 ? bEta / (aEta - 1.0) : bEta;
    init.zeta = prior.aZeta / prior.bZeta;

    McmcChain raw = rw_metropolis(std::cref(density), init.flatten(), transforms, config);

    CalibrationChain chain;
    chain.states = std::move(raw.states);
    chain.acceptanceRate = raw.acceptanceRate;
    return chain;
}

PosteriorSummary predict_held_out(const CalibrationChain& chain,
                                  const ObservationModel& model,
                                  const std::vector<EmulatorPosterior>& observedEmulators,
                                  const EmulatorPosterior& heldOutEmulator) {
    model.validate();
    if (chain.nRetained() == 0) {
        throw ArgumentError("predict_held_out: empty chain");
    }
    const Eigen::Index n = model.nObserved();
    const Eigen::Index r = chain.states.cols() - 2;

    Vector perState = Vector::Constant(chain.nRetained(),
                                       std::numeric_limits<double>::quiet_NaN());
    std::vector<double> condMeans;
    std::vector<double> condVars;
    condMeans.reserve(static_cast<std::size_t>(chain.nRetained()));
    Eigen::Index skipped = 0;

    for (Eigen::Index s = 0; s < chain.nRetained(); ++s) {
        const Vector xStar = chain.states.row(s).head(r).transpose();
        const double sigmaEtaSq = chain.states(s, r);
        const double zeta = chain.states(s, r + 1);

        Vector means(n), vars(n);
        bool ok = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Prediction p = predict(observedEmulators[static_cast<std::size_t>(i)], xStar);
            means[i] = p.mean;
            vars[i] = p.variance;
            ok = ok && std::isfinite(p.mean) && std::isfinite(p.variance);
        }
        const Prediction held = predict(heldOutEmulator, xStar);

        Matrix cov = sigmaEtaSq * depth_correlation(model.observedDepths, zeta);
        cov.diagonal() += vars;
        cov.diagonal().array() += model.sigmaESq;
        Eigen::LLT<Matrix> llt(cov);
        if (!ok || llt.info() != Eigen::Success) {
            ++skipped;
            continue;
        }

        // Cross covariance of y(d5) with z: only the discrepancy correlates
        // across depths given x*.
        Vector cross(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = model.heldOutDepth - model.observedDepths[i];
            cross[i] = sigmaEtaSq * std::exp(-zeta * d * d);
        }
        const Vector alpha = llt.solve(model.z - means);
        const double condMean = held.mean + cross.dot(alpha);
        const double condVar =
            std::max(0.0, held.variance + sigmaEtaSq - cross.dot(llt.solve(cross)));
        perState[s] = condMean;
        condMeans.push_back(condMean);
        condVars.push_back(condVar);
    }

    if (condMeans.empty() ||
        static_cast<double>(skipped) > 0.1 * static_cast<double>(chain.nRetained())) {
        std::ostringstream os;
        os << "predict_held_out: " << skipped << " of " << chain.nRetained()
           << " states failed conditioning";
        throw NumericalError(os.str());
    }
    if (skipped > 0) {
        std::ostringstream os;
        os << "predict_held_out: skipped " << skipped << " states";
        emit_warning(os.str());
    }

    PosteriorSummary summary;
    summary.nRetained = static_cast<Eigen::Index>(condMeans.size());
    summary.nSkipped = skipped;
    summary.acceptanceRate = chain.acceptanceRate;
    // Aligned with the chain rows; NaN marks skipped states.
    summary.perStateMeans = perState;
    summary.expectation =
        Eigen::Map<const Vector>(condMeans.data(), static_cast<Eigen::Index>(condMeans.size()))
            .mean();

    double varOfMeans = 0.0;
    double meanOfVars = 0.0;
    for (std::size_t i = 0; i < condMeans.size(); ++i) {
        const double d = condMeans[i] - summary.expectation;
        varOfMeans += d * d;
        meanOfVars += condVars[i];
    }
    varOfMeans /= static_cast<double>(condMeans.size());
    meanOfVars /= static_cast<double>(condMeans.size());
    summary.variance = meanOfVars + varOfMeans;
    summary.mcse = std::sqrt(varOfMeans / static_cast<double>(condMeans.size()));
    return summary;
}

FittedJudgement fit_judgement(const JudgementSet& judgement, const Design& ensemble,
                              const ObservationModel& model, const AnalysisConfig& config) {
    judgement.validate();
    model.validate();
    ensemble.validate();

    FittedJudgement fitted;
    fitted.judgement = judgement;
    fitted.discrepancy = config.baseDiscrepancy;
    fitted.discrepancy.tier = judgement.tier;

    const CorrelationFamily family = judgement.correlation_family();
    const double power = judgement.correlation_power();
    const BasisPolicy policy = judgement.basis_policy();

    HyperPriors priors = config.basePriors;
    for (BetaPrior& p : priors.kappaBeta) p = p.scaled(judgement.kappaPriorScale);

    auto fitColumn = [&](Eigen::Index column, std::uint64_t stageSeed) {
        const BasisSelection sel = select_basis(ensemble, column, policy);
        HyperPriors colPriors = priors;
        colPriors.nuBeta = priors.nu_prior_for(sel.olsR2).scaled(judgement.nuPriorScale);
        AnnealConfig anneal = config.anneal;
        anneal.seed = stageSeed;
        const MapEstimate map = map_hyperparameters(ensemble, column, sel.basis, colPriors,
                                                    anneal, family, power);
        CorrelationSpec corr;
        corr.family = family;
        corr.power = power;
        corr.kappa = map.kappa;
        corr.nugget = map.nu;
        fitted.olsR2.push_back(sel.olsR2);
        return fit_emulator(ensemble, column, sel.basis, corr);
    };

    for (Eigen::Index i = 0; i < model.nObserved(); ++i) {
        fitted.observedEmulators.push_back(fitColumn(
            model.observedColumns[static_cast<std::size_t>(i)],
            derive_seed(config.seed, 0xE1u, static_cast<std::uint64_t>(i))));
    }
    fitted.heldOutEmulator =
        fitColumn(model.heldOutColumn, derive_seed(config.seed, 0xE1u, 0xFFFFu));
    return fitted;
}

PosteriorSummary calibrate_fitted(const FittedJudgement& fitted, const ObservationModel& model,
                                  const McmcConfig& mcmc, std::uint64_t seed) {
    McmcConfig config = mcmc;
    config.seed = seed;
    const CalibrationChain chain =
        run_mcmc(model, fitted.observedEmulators, fitted.discrepancy, config);
    return predict_held_out(chain, model, fitted.observedEmulators, fitted.heldOutEmulator);
}

PosteriorSummary run_analysis(const JudgementSet& judgement, const ObservationModel& model,
                              const Design& ensemble, const AnalysisConfig& config) {
    const FittedJudgement fitted = fit_judgement(judgement, ensemble, model, config);
    return calibrate_fitted(fitted, model, config.mcmc,
                            derive_seed(config.seed, 0x3Cu));
}

}  // namespace pba
