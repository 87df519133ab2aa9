#pragma once

#include "pba/bayes_linear.hpp"
#include "pba/calibration.hpp"
#include "pba/exchangeability.hpp"
#include "pba/judgement.hpp"
#include "pba/testbed.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pba {

// ---------------------------------------------------------------------------
// Class partition of the not-ruled-out judgement space
// ---------------------------------------------------------------------------

// One co-exchangeable class: the judgement options its members draw from and
// how many members to execute.
struct ClassSpec {
    int classId = 1;
    std::vector<BasisChoice> basisOptions;
    std::vector<DiscrepancyTier> tierOptions;
    std::vector<FamilyChoice> familyOptions = {
        FamilyChoice::PowerExp2, FamilyChoice::PowerExp19, FamilyChoice::PowerExp15,
        FamilyChoice::Matern32, FamilyChoice::Matern52};
    double kappaScaleLo = 0.5;
    double kappaScaleHi = 5.0;
    double nuScaleLo = 1.0;
    double nuScaleHi = 4.0;
    int sampleCount = 8;

    void validate() const;
};

struct SampledMember {
    AnalysisLabel label;
    JudgementSet judgement;
};

struct ClassPartition {
    std::vector<ClassSpec> classes;

    void validate() const;
    Eigen::Index classCount() const { return static_cast<Eigen::Index>(classes.size()); }

    // Draws the executed members for the run; deterministic given the seed and
    // fixed across replicates.
    std::vector<SampledMember> sample_members(std::uint64_t seed) const;

    // The six classes {complex, linear, constant mean} x {standard/medium,
    // high discrepancy}, 32 members in the first class and 8 elsewhere.
    static ClassPartition six_class_default();
    // Small two-class partition for desk-scale runs: {complex x std/med,
    // constant x high}.
    static ClassPartition two_class_desk(int membersPerClass);
};

// ---------------------------------------------------------------------------
// Prior predictive sampling of (y, z) pairs
// ---------------------------------------------------------------------------

struct ReplicateDraw {
    double yHeldOut = 0.0;  // the sampled quantity of interest y(d5)
    Vector yAll;            // sampled y over all depths
    Vector zObserved;       // y at observed depths plus observation noise
};

// Generator of coherent (y, z) samples. ySampler produces y over all depths;
// z adds independent N(0, sigmaESq) noise at the observed depths.
struct PriorPredictive {
    std::function<Vector(std::uint64_t)> ySampler;
    double sigmaESq = 0.0;
    Eigen::Index heldOutIndex = 0;            // position of y(d5) in the y vector
    std::vector<Eigen::Index> observedIndices;

    ReplicateDraw sample(std::uint64_t seed) const;

    // Direct second-order specification: y ~ N(mean, variance) over depths.
    static PriorPredictive direct(const BeliefSpec& yBelief, double sigmaESq,
                                  Eigen::Index heldOutIndex,
                                  std::vector<Eigen::Index> observedIndices);

    // The sampled-judgement construction: pick one fitted judgement at random,
    // sample x* uniformly, draw each depth from the emulator's predictive t
    // distribution and add a discrepancy draw from its prior.
    static PriorPredictive from_fitted_judgements(
        const std::vector<FittedJudgement>* fitted, const ObservationModel& model);

    // Truth generator grounded in the synthetic simulator: x* ~ U[0,1]^r plus
    // the model's fixed discrepancy.
    static PriorPredictive from_testbed(const SyntheticModel& model,
                                        const ObservationModel& obs);
};

ReplicateDraw sample_replicate(const PriorPredictive& pp, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Replicate execution
// ---------------------------------------------------------------------------

// Runs one Bayesian analysis on the given data. Index 0 is J0; indices
// 1..N are the sampled members in order. Must be deterministic given seed.
using AnalysisRunner =
    std::function<double(const Vector& zObserved, std::size_t analysisIndex,
                         std::uint64_t seed)>;

struct ReplicateRow {
    int replicateId = 0;
    double yHat = 0.0;
    Vector values;  // J0 first, then members in label order
    bool complete = false;
};

struct GRow {
    int replicateId = 0;
    double yHat = 0.0;
    Vector g;  // (k + 1) components
};

// Executes J0 plus every sampled member on one replicate's data. Failed
// analyses mark the row partial.
ReplicateRow run_replicate_values(const ReplicateDraw& draw, int replicateId,
                                  std::size_t memberCount, const AnalysisRunner& runner,
                                  std::uint64_t masterSeed);

// Adjusts the class means by the replicate's executed analyses and assembles
// the G row for a joint built by build_joint_D over the member labels.
GRow replicate_g_row(const ReplicateRow& row, const JointSpec& joint);

// Full single-replicate step: values, class-mean adjustment against the given
// moments, G assembly.
GRow run_replicate(const ReplicateDraw& draw, int replicateId,
                   const std::vector<SampledMember>& members,
                   const std::vector<ClassMoments>& moments, const AnalysisRunner& runner,
                   std::uint64_t masterSeed);

// Parallel phase-A execution over a bounded worker pool. Rows are slotted by
// replicate id, so results are independent of scheduling. preloaded rows
// (resume) are reused without recomputation; onComplete fires for newly
// computed rows (serialized by an internal mutex).
std::vector<ReplicateRow> run_replicates(
    const PriorPredictive& pp, std::size_t memberCount, const AnalysisRunner& runner,
    int replicateCount, int workerCount, std::uint64_t masterSeed,
    const std::vector<ReplicateRow>& preloaded = {},
    const std::function<void(const ReplicateRow&)>& onComplete = nullptr);

// ---------------------------------------------------------------------------
// Moments of (y, G) and the final assessment
// ---------------------------------------------------------------------------

struct PbaMoments {
    double eY = 0.0;
    double varY = 0.0;
    Vector eG;
    Matrix varG;
    Vector covYG;       // Cov[y, G]
    Eigen::Index count = 0;
    Vector seEG;        // Monte Carlo standard errors of eG
};

// (Optionally weighted) sample moments of the replicate (y, G) table.
// Weights support re-weighting to alternative (E[y], Var[y]) choices.
PbaMoments estimate_moments(const std::vector<GRow>& rows,
                            const Vector& weights = Vector());

struct PBAResult {
    double eGy = 0.0;               // E_G[y]
    double eJ0 = 0.0;               // E[y|z; J0] = first component of observed G
    double adjustedVariance = 0.0;  // Var[y] - Var[E_G[y]]
    double adjustedVarianceJ0 = 0.0;
    Vector coefficients;            // over the components of G
    double intercept = 0.0;
    double resolutionLowerBound = 0.0;
    PbaMoments moments;
    Vector observedG;
    int replicateCount = 0;
    int partialCount = 0;
    std::uint64_t masterSeed = 0;
    std::string configHash;
};

// Eq.-(4)-style Bayes linear assessment of y by the observed G under the
// estimated moments.
PBAResult posterior_belief_assessment(const PbaMoments& moments, const GVector& observedG);

// Lower bound on the proportion of uncertainty resolved by adjusting with the
// full G rather than with G1 = E[y|z;J0] alone.
double resolution_lower_bound(const PbaMoments& moments);

// ---------------------------------------------------------------------------
// End-to-end engine
// ---------------------------------------------------------------------------

struct EngineConfig {
    int replicateCount = 2000;
    int workerCount = 1;
    McmcConfig replicateMcmc;  // short chains for the sampling phase
    McmcConfig finalMcmc;      // long chains for the observed-data analyses
    double maxPartialFraction = 0.05;
    MomentEstimationOptions momentOptions;
    std::uint64_t masterSeed = 0;

    EngineConfig();
};

struct AnalysisRecord {
    std::string id;
    AnalysisLabel label;       // classId 0 marks J0
    PosteriorSummary summary;  // observed-data analysis
    CalibrationChain chain;
};

// Members executed in a run with the given master seed (fixed across
// replicates; shared between the engine and persistence layers).
std::vector<SampledMember> members_for_run(const ClassPartition& partition,
                                           std::uint64_t masterSeed);

struct PbaRunResult {
    PBAResult pba;
    std::vector<SampledMember> members;
    std::vector<FittedJudgement> fitted;  // J0 first, then members
    std::vector<ClassMoments> classMoments;
    Vector observedD;
    Vector adjustedClassMeans;
    std::vector<AnalysisRecord> observedAnalyses;
    std::vector<GRow> gRows;
    int completeReplicates = 0;
    int partialReplicates = 0;
};

// Full pipeline: fit every judgement once, sample replicates, estimate class
// and (y, G) moments, run the observed-data analyses and adjust. onReplicate
// is invoked for each newly computed replicate row (persistence hook).
PbaRunResult run_pba(const Design& ensemble, const ObservationModel& model,
                     const JudgementSet& j0, const ClassPartition& partition,
                     const AnalysisConfig& analysisConfig, const EngineConfig& engine,
                     const std::vector<ReplicateRow>& preloaded = {},
                     const std::function<void(const ReplicateRow&)>& onReplicate = nullptr,
                     const PriorPredictive* customPriorPredictive = nullptr);

}  // namespace pba
