#include "pba/pba_engine.hpp"

#include "pba/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace pba {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Deterministic parallel loop: work is keyed by index, failures are
// propagated after all workers join.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr firstError;
    std::mutex errorMutex;
    auto worker = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!firstError) firstError = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (firstError) std::rethrow_exception(firstError);
}

}  // namespace

// ---------------------------------------------------------------------------
// Class partition
// ---------------------------------------------------------------------------

void ClassSpec::validate() const {
    if (basisOptions.empty() || tierOptions.empty() || familyOptions.empty()) {
        throw ConfigError("ClassSpec: every option list must be non-empty");
    }
    if (kappaScaleLo < 0.5 || kappaScaleHi > 5.0 || kappaScaleLo > kappaScaleHi) {
        throw ConfigError("ClassSpec: kappa prior scale range must lie in [0.5, 5]");
    }
    if (nuScaleLo <= 0.0 || nuScaleHi > 4.0 || nuScaleLo > nuScaleHi) {
        throw ConfigError("ClassSpec: nu prior scale range must lie in (0, 4]");
    }
    if (sampleCount < 0) throw ConfigError("ClassSpec: sampleCount must be >= 0");
}

void ClassPartition::validate() const {
    if (classes.empty()) throw ConfigError("ClassPartition: needs at least one class");
    std::set<int> ids;
    for (const ClassSpec& c : classes) {
        c.validate();
        if (!ids.insert(c.classId).second) {
            throw ConfigError("ClassPartition: duplicate classId");
        }
    }
}

std::vector<SampledMember> ClassPartition::sample_members(std::uint64_t seed) const {
    validate();
    std::vector<SampledMember> members;
    for (const ClassSpec& c : classes) {
        for (int m = 0; m < c.sampleCount; ++m) {
            Rng rng = make_rng(derive_seed(seed, 0x33u,
                                           static_cast<std::uint64_t>(c.classId),
                                           static_cast<std::uint64_t>(m)));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            auto pick = [&](const auto& options) {
                const std::size_t i = static_cast<std::size_t>(
                    std::min<double>(unif(rng) * static_cast<double>(options.size()),
                                     static_cast<double>(options.size()) - 1.0));
                return options[i];
            };
            SampledMember member;
            member.label = AnalysisLabel{c.classId, m};
            member.judgement.basis = pick(c.basisOptions);
            member.judgement.tier = pick(c.tierOptions);
            member.judgement.family = pick(c.familyOptions);
            member.judgement.kappaPriorScale =
                c.kappaScaleLo * std::exp(unif(rng) * std::log(c.kappaScaleHi / c.kappaScaleLo));
            member.judgement.nuPriorScale =
                c.nuScaleLo * std::exp(unif(rng) * std::log(c.nuScaleHi / c.nuScaleLo));
            std::ostringstream id;
            id << "C" << c.classId << "_m" << m;
            member.judgement.id = id.str();
            member.judgement.validate();
            members.push_back(std::move(member));
        }
    }
    return members;
}

ClassPartition ClassPartition::six_class_default() {
    ClassPartition p;
    const std::vector<BasisChoice> complexBasis = {BasisChoice::Stepwise10,
                                                   BasisChoice::Stepwise5};
    const std::vector<DiscrepancyTier> stdMed = {DiscrepancyTier::Standard,
                                                 DiscrepancyTier::Medium};
    const std::vector<DiscrepancyTier> high = {DiscrepancyTier::High};

    auto make = [](int id, std::vector<BasisChoice> basis,
                   std::vector<DiscrepancyTier> tiers, int count) {
        ClassSpec c;
        c.classId = id;
        c.basisOptions = std::move(basis);
        c.tierOptions = std::move(tiers);
        c.sampleCount = count;
        return c;
    };
    p.classes.push_back(make(1, complexBasis, stdMed, 32));
    p.classes.push_back(make(2, {BasisChoice::LinearAll}, stdMed, 8));
    p.classes.push_back(make(3, {BasisChoice::Constant}, stdMed, 8));
    p.classes.push_back(make(4, complexBasis, high, 8));
    p.classes.push_back(make(5, {BasisChoice::LinearAll}, high, 8));
    p.classes.push_back(make(6, {BasisChoice::Constant}, high, 8));
    return p;
}

ClassPartition ClassPartition::two_class_desk(int membersPerClass) {
    ClassPartition p;
    ClassSpec c1;
    c1.classId = 1;
    c1.basisOptions = {BasisChoice::Stepwise10, BasisChoice::Stepwise5};
    c1.tierOptions = {DiscrepancyTier::Standard, DiscrepancyTier::Medium};
    c1.sampleCount = membersPerClass;
    ClassSpec c2;
    c2.classId = 2;
    c2.basisOptions = {BasisChoice::Constant};
    c2.tierOptions = {DiscrepancyTier::High};
    c2.sampleCount = membersPerClass;
    p.classes = {c1, c2};
    return p;
}

// ---------------------------------------------------------------------------
// Prior predictive
// ---------------------------------------------------------------------------

ReplicateDraw PriorPredictive::sample(std::uint64_t seed) const {
    if (!ySampler) throw ArgumentError("PriorPredictive: no y sampler configured");
    ReplicateDraw draw;
    draw.yAll = ySampler(derive_seed(seed, 0x59u));
    if (heldOutIndex < 0 || heldOutIndex >= draw.yAll.size()) {
        throw ArgumentError("PriorPredictive: heldOutIndex out of range");
    }
    draw.yHeldOut = draw.yAll[heldOutIndex];
    Rng rng = make_rng(derive_seed(seed, 0x5Au));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(sigmaESq);
    draw.zObserved.resize(static_cast<Eigen::Index>(observedIndices.size()));
    for (std::size_t j = 0; j < observedIndices.size(); ++j) {
        draw.zObserved[static_cast<Eigen::Index>(j)] =
            draw.yAll[observedIndices[j]] + sd * normal(rng);
    }
    return draw;
}

ReplicateDraw sample_replicate(const PriorPredictive& pp, std::uint64_t seed) {
    return pp.sample(seed);
}

PriorPredictive PriorPredictive::direct(const BeliefSpec& yBelief, double sigmaESq,
                                        Eigen::Index heldOutIndex,
                                        std::vector<Eigen::Index> observedIndices) {
    // Matrix square root via the eigendecomposition so semi-definite
    // specifications sample cleanly.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(yBelief.variance);
    const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
    const Matrix sqrtVar =
        eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    const Vector mean = yBelief.mean;

    PriorPredictive pp;
    pp.sigmaESq = sigmaESq;
    pp.heldOutIndex = heldOutIndex;
    pp.observedIndices = std::move(observedIndices);
    pp.ySampler = [mean, sqrtVar](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector u(mean.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
        return Vector(mean + sqrtVar * u);
    };
    return pp;
}

PriorPredictive PriorPredictive::from_fitted_judgements(
    const std::vector<FittedJudgement>* fitted, const ObservationModel& model) {
    if (!fitted || fitted->empty()) {
        throw ArgumentError("PriorPredictive: need at least one fitted judgement");
    }
    const Eigen::Index nObs = model.nObserved();
    Vector depths(nObs + 1);
    depths.head(nObs) = model.observedDepths;
    depths[nObs] = model.heldOutDepth;

    PriorPredictive pp;
    pp.sigmaESq = model.sigmaESq;
    pp.heldOutIndex = nObs;
    for (Eigen::Index i = 0; i < nObs; ++i) pp.observedIndices.push_back(i);

    pp.ySampler = [fitted, depths, nObs](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);

        const std::size_t pick = static_cast<std::size_t>(std::min<double>(
            unif(rng) * static_cast<double>(fitted->size()),
            static_cast<double>(fitted->size()) - 1.0));
        const FittedJudgement& fj = (*fitted)[pick];

        const Eigen::Index r = fj.heldOutEmulator.trainPoints.cols();
        Vector xStar(r);
        for (Eigen::Index i = 0; i < r; ++i) xStar[i] = unif(rng);

        auto drawFrom = [&](const EmulatorPosterior& em) {
            const Prediction p = predict(em, xStar);
            std::student_t_distribution<double> tDist(static_cast<double>(em.dof));
            const double scale =
                std::sqrt(p.variance * static_cast<double>(em.dof - 2) /
                          static_cast<double>(em.dof));
            return p.mean + scale * tDist(rng);
        };

        Vector y(nObs + 1);
        for (Eigen::Index i = 0; i < nObs; ++i) {
            y[i] = drawFrom(fj.observedEmulators[static_cast<std::size_t>(i)]);
        }
        y[nObs] = drawFrom(fj.heldOutEmulator);

        // Discrepancy draw from its prior under the judgement's tier.
        std::gamma_distribution<double> zetaDist(fj.discrepancy.aZeta,
                                                 1.0 / fj.discrepancy.bZeta);
        const double zeta = zetaDist(rng);
        std::gamma_distribution<double> etaDist(fj.discrepancy.effective_a_eta(),
                                                1.0 / fj.discrepancy.effective_b_eta());
        const double sigmaEtaSq = 1.0 / etaDist(rng);

        Matrix k(depths.size(), depths.size());
        for (Eigen::Index i = 0; i < depths.size(); ++i) {
            for (Eigen::Index j = 0; j < depths.size(); ++j) {
                const double d = depths[i] - depths[j];
                k(i, j) = std::exp(-zeta * d * d);
            }
        }
        k.diagonal().array() += 1e-12;
        Eigen::LLT<Matrix> llt(k);
        Vector u(depths.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
        y += std::sqrt(sigmaEtaSq) * (Matrix(llt.matrixL()) * u);
        return y;
    };
    return pp;
}

PriorPredictive PriorPredictive::from_testbed(const SyntheticModel& model,
                                              const ObservationModel& obs) {
    model.validate();
    PriorPredictive pp;
    pp.sigmaESq = obs.sigmaESq;
    pp.heldOutIndex = obs.heldOutColumn;
    pp.observedIndices = obs.observedColumns;
    SyntheticModel copy = model;
    pp.ySampler = [copy](std::uint64_t seed) { return sample_truth(copy, seed).y; };
    return pp;
}

// ---------------------------------------------------------------------------
// Replicates
// ---------------------------------------------------------------------------

ReplicateRow run_replicate_values(const ReplicateDraw& draw, int replicateId,
                                  std::size_t memberCount, const AnalysisRunner& runner,
                                  std::uint64_t masterSeed) {
    ReplicateRow row;
    row.replicateId = replicateId;
    row.yHat = draw.yHeldOut;
    row.values = Vector::Constant(static_cast<Eigen::Index>(memberCount) + 1, kNaN);
    row.complete = true;
    for (std::size_t idx = 0; idx < memberCount + 1; ++idx) {
        try {
            row.values[static_cast<Eigen::Index>(idx)] =
                runner(draw.zObserved, idx,
                       derive_seed(masterSeed, 0xA7u,
                                   static_cast<std::uint64_t>(replicateId), idx));
        } catch (const std::exception& e) {
            row.complete = false;
            std::ostringstream os;
            os << "replicate " << replicateId << " analysis " << idx
               << " failed: " << e.what();
            emit_warning(os.str());
        }
    }
    return row;
}

GRow replicate_g_row(const ReplicateRow& row, const JointSpec& joint) {
    if (!row.complete) {
        throw ArgumentError("replicate_g_row: partial replicates are excluded");
    }
    const Vector memberValues = row.values.tail(row.values.size() - 1);
    const Vector adjusted = adjust_class_means(joint, memberValues);
    Vector e0(1);
    e0[0] = row.values[0];
    GRow g;
    g.replicateId = row.replicateId;
    g.yHat = row.yHat;
    g.g = assemble_G(e0, adjusted).components;
    return g;
}

GRow run_replicate(const ReplicateDraw& draw, int replicateId,
                   const std::vector<SampledMember>& members,
                   const std::vector<ClassMoments>& moments, const AnalysisRunner& runner,
                   std::uint64_t masterSeed) {
    const ReplicateRow row =
        run_replicate_values(draw, replicateId, members.size(), runner, masterSeed);
    if (!row.complete) {
        throw NumericalError("run_replicate: an analysis failed; replicate is partial");
    }
    std::vector<AnalysisLabel> labels;
    labels.reserve(members.size());
    for (const SampledMember& m : members) labels.push_back(m.label);
    const JointSpec joint = build_joint_D(moments, labels);
    return replicate_g_row(row, joint);
}

std::vector<ReplicateRow> run_replicates(
    const PriorPredictive& pp, std::size_t memberCount, const AnalysisRunner& runner,
    int replicateCount, int workerCount, std::uint64_t masterSeed,
    const std::vector<ReplicateRow>& preloaded,
    const std::function<void(const ReplicateRow&)>& onComplete) {
    if (replicateCount < 1) throw ArgumentError("run_replicates: replicateCount must be >= 1");

    std::vector<std::optional<ReplicateRow>> slots(
        static_cast<std::size_t>(replicateCount));
    for (const ReplicateRow& row : preloaded) {
        if (row.replicateId < 0 || row.replicateId >= replicateCount) continue;
        if (row.values.size() != static_cast<Eigen::Index>(memberCount) + 1) {
            throw ConfigError("run_replicates: preloaded row width does not match members");
        }
        slots[static_cast<std::size_t>(row.replicateId)] = row;
    }

    std::mutex completeMutex;
    parallel_for(replicateCount, workerCount, [&](int id) {
        if (slots[static_cast<std::size_t>(id)].has_value()) return;
        const ReplicateDraw draw =
            pp.sample(derive_seed(masterSeed, 0x5Eu, static_cast<std::uint64_t>(id)));
        ReplicateRow row =
            run_replicate_values(draw, id, memberCount, runner, masterSeed);
        {
            std::lock_guard<std::mutex> lock(completeMutex);
            if (onComplete) onComplete(row);
        }
        slots[static_cast<std::size_t>(id)] = std::move(row);
    });

    std::vector<ReplicateRow> rows;
    rows.reserve(static_cast<std::size_t>(replicateCount));
    for (auto& slot : slots) rows.push_back(std::move(*slot));
    return rows;
}

// ---------------------------------------------------------------------------
// Moments and the assessment
// ---------------------------------------------------------------------------

PbaMoments estimate_moments(const std::vector<GRow>& rows, const Vector& weights) {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    if (n < 2) throw EstimationError("estimate_moments: need at least 2 complete replicates");
    const Eigen::Index dim = rows.front().g.size();

    Vector w;
    if (weights.size() == 0) {
        w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    } else {
        if (weights.size() != n) {
            throw ArgumentError("estimate_moments: one weight per replicate required");
        }
        if ((weights.array() < 0.0).any() || weights.sum() <= 0.0) {
            throw ArgumentError("estimate_moments: weights must be non-negative and not all zero");
        }
        w = weights / weights.sum();
    }

    PbaMoments m;
    m.count = n;
    m.eY = 0.0;
    m.eG = Vector::Zero(dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const GRow& row = rows[static_cast<std::size_t>(i)];
        if (row.g.size() != dim) throw ArgumentError("estimate_moments: ragged G rows");
        m.eY += w[i] * row.yHat;
        m.eG += w[i] * row.g;
    }

    // Unbiased weighted covariance (reliability weights).
    const double denom = 1.0 - w.squaredNorm();
    if (denom <= 0.0) {
        throw EstimationError("estimate_moments: effective sample size too small");
    }
    m.varY = 0.0;
    m.varG = Matrix::Zero(dim, dim);
    m.covYG = Vector::Zero(dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const GRow& row = rows[static_cast<std::size_t>(i)];
        const double dy = row.yHat - m.eY;
        const Vector dg = row.g - m.eG;
        m.varY += w[i] * dy * dy;
        m.varG += w[i] * (dg * dg.transpose());
        m.covYG += w[i] * dy * dg;
    }
    m.varY /= denom;
    m.varG /= denom;
    m.covYG /= denom;

    if (m.varG.diagonal().maxCoeff() <= 1e-300) {
        emit_warning("estimate_moments: Var[G] is degenerate (constant replicates)");
    }
    m.seEG = (m.varG.diagonal() / static_cast<double>(n)).cwiseSqrt();
    return m;
}

PBAResult posterior_belief_assessment(const PbaMoments& moments, const GVector& observedG) {
    if (observedG.blockDim != 1 || observedG.components.size() != moments.eG.size()) {
        throw ArgumentError("posterior_belief_assessment: G dimension mismatch");
    }
    Vector meanY(1);
    meanY[0] = moments.eY;
    Matrix varY(1, 1);
    varY(0, 0) = moments.varY;
    const Matrix varG = clamp_psd(moments.varG, "Var[G]");
    const JointSpec joint(BeliefSpec(meanY, varY),
                          BeliefSpec(moments.eG, varG),
                          moments.covYG.transpose());

    const AdjustmentResult adj = adjust(joint, observedG.components);

    PBAResult result;
    result.eGy = adj.adjustedMean[0];
    result.eJ0 = observedG.components[0];
    result.adjustedVariance = adj.adjustedVariance(0, 0);
    result.coefficients = adj.weights.row(0).transpose();
    result.intercept = adj.intercept[0];
    result.moments = moments;
    result.observedG = observedG.components;

    // Adjustment by G1 alone, for the resolution bound.
    const double var1 = moments.varG(0, 0);
    const double resolved1 =
        var1 > 0.0 ? moments.covYG[0] * moments.covYG[0] / var1 : 0.0;
    result.adjustedVarianceJ0 = std::max(0.0, moments.varY - resolved1);
    result.resolutionLowerBound = resolution_lower_bound(moments);
    return result;
}

double resolution_lower_bound(const PbaMoments& moments) {
    if (!(moments.varY > 0.0)) {
        throw EstimationError("resolution_lower_bound: degenerate Var[y]");
    }
    const Matrix pinv = pseudo_inverse(clamp_psd(moments.varG, "Var[G]"));
    const double resolvedFull = moments.covYG.dot(pinv * moments.covYG);
    const double adjFull = std::max(0.0, moments.varY - resolvedFull);

    const double var1 = moments.varG(0, 0);
    const double resolved1 =
        var1 > 0.0 ? moments.covYG[0] * moments.covYG[0] / var1 : 0.0;
    const double adjJ0 = std::max(0.0, moments.varY - resolved1);
    if (adjJ0 <= 0.0) return 0.0;
    return std::clamp(1.0 - adjFull / adjJ0, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// End-to-end engine
// ---------------------------------------------------------------------------

EngineConfig::EngineConfig() {
    replicateMcmc.nSamples = 6000;
    replicateMcmc.burnIn = 1000;
    replicateMcmc.thin = 10;
    finalMcmc.nSamples = 21000;
    finalMcmc.burnIn = 1000;
    finalMcmc.thin = 20;
}

std::vector<SampledMember> members_for_run(const ClassPartition& partition,
                                           std::uint64_t masterSeed) {
    return partition.sample_members(derive_seed(masterSeed, 0x10u));
}

PbaRunResult run_pba(const Design& ensemble, const ObservationModel& model,
                     const JudgementSet& j0, const ClassPartition& partition,
                     const AnalysisConfig& analysisConfig, const EngineConfig& engine,
                     const std::vector<ReplicateRow>& preloaded,
                     const std::function<void(const ReplicateRow&)>& onReplicate,
                     const PriorPredictive* customPriorPredictive) {
    model.validate();
    ensemble.validate();
    partition.validate();
    if (engine.replicateCount < 2) {
        throw EstimationError("run_pba: need at least 2 replicates for moment estimation");
    }
    const std::uint64_t master = engine.masterSeed;

    PbaRunResult result;
    result.members = members_for_run(partition, master);
    const std::size_t nAnalyses = result.members.size() + 1;

    // Emulators depend only on the ensemble: fit each judgement once.
    result.fitted.resize(nAnalyses);
    std::vector<FittedJudgement>& fitted = result.fitted;
    parallel_for(static_cast<int>(nAnalyses), engine.workerCount, [&](int idx) {
        const JudgementSet& j =
            idx == 0 ? j0 : result.members[static_cast<std::size_t>(idx - 1)].judgement;
        AnalysisConfig cfg = analysisConfig;
        cfg.seed = derive_seed(master, 0x20u, static_cast<std::uint64_t>(idx));
        fitted[static_cast<std::size_t>(idx)] = fit_judgement(j, ensemble, model, cfg);
    });

    PriorPredictive pp = customPriorPredictive
                             ? *customPriorPredictive
                             : PriorPredictive::from_fitted_judgements(&fitted, model);

    AnalysisRunner runner = [&](const Vector& z, std::size_t idx, std::uint64_t seed) {
        ObservationModel m = model;
        m.z = z;
        return calibrate_fitted(fitted[idx], m, engine.replicateMcmc, seed).expectation;
    };

    const std::vector<ReplicateRow> rows =
        run_replicates(pp, result.members.size(), runner, engine.replicateCount,
                       engine.workerCount, master, preloaded, onReplicate);

    std::vector<const ReplicateRow*> complete;
    for (const ReplicateRow& row : rows) {
        if (row.complete) complete.push_back(&row);
    }
    result.completeReplicates = static_cast<int>(complete.size());
    result.partialReplicates = engine.replicateCount - result.completeReplicates;
    if (result.partialReplicates >
        engine.maxPartialFraction * static_cast<double>(engine.replicateCount)) {
        std::ostringstream os;
        os << "run_pba: " << result.partialReplicates << " of " << engine.replicateCount
           << " replicates are partial (limit "
           << engine.maxPartialFraction * 100.0 << "%)";
        throw NumericalError(os.str());
    }

    // Class moments from the member columns of the complete replicates.
    std::vector<AnalysisLabel> labels;
    for (const SampledMember& m : result.members) labels.push_back(m.label);
    std::vector<ReplicateSample> samples;
    samples.reserve(complete.size());
    for (const ReplicateRow* row : complete) {
        ReplicateSample s;
        for (Eigen::Index j = 1; j < row->values.size(); ++j) {
            Vector v(1);
            v[0] = row->values[j];
            s.values.push_back(v);
        }
        samples.push_back(std::move(s));
    }
    result.classMoments = estimate_class_moments(labels, samples, engine.momentOptions);
    const JointSpec joint = build_joint_D(result.classMoments, labels);

    result.gRows.reserve(complete.size());
    for (const ReplicateRow* row : complete) {
        result.gRows.push_back(replicate_g_row(*row, joint));
    }
    PbaMoments moments = estimate_moments(result.gRows);

    // Observed-data analyses with the long chains.
    result.observedAnalyses.resize(nAnalyses);
    parallel_for(static_cast<int>(nAnalyses), engine.workerCount, [&](int idx) {
        const FittedJudgement& fj = fitted[static_cast<std::size_t>(idx)];
        McmcConfig mcmc = engine.finalMcmc;
        mcmc.seed = derive_seed(master, 0x30u, static_cast<std::uint64_t>(idx));
        CalibrationChain chain =
            run_mcmc(model, fj.observedEmulators, fj.discrepancy, mcmc);
        AnalysisRecord rec;
        rec.label = idx == 0 ? AnalysisLabel{0, 0}
                             : result.members[static_cast<std::size_t>(idx - 1)].label;
        rec.id = idx == 0 ? "J0" : result.members[static_cast<std::size_t>(idx - 1)].judgement.id;
        rec.summary = predict_held_out(chain, model, fj.observedEmulators, fj.heldOutEmulator);
        rec.chain = std::move(chain);
        result.observedAnalyses[static_cast<std::size_t>(idx)] = std::move(rec);
    });

    result.observedD.resize(static_cast<Eigen::Index>(result.members.size()));
    for (std::size_t i = 0; i < result.members.size(); ++i) {
        result.observedD[static_cast<Eigen::Index>(i)] =
            result.observedAnalyses[i + 1].summary.expectation;
    }
    result.adjustedClassMeans = adjust_class_means(joint, result.observedD);
    Vector e0(1);
    e0[0] = result.observedAnalyses[0].summary.expectation;
    const GVector observedG = assemble_G(e0, result.adjustedClassMeans);

    result.pba = posterior_belief_assessment(moments, observedG);
    result.pba.replicateCount = result.completeReplicates;
    result.pba.partialCount = result.partialReplicates;
    result.pba.masterSeed = master;
    return result;
}

}  // namespace pba
