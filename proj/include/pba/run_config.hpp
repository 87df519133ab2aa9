#pragma once

#include "pba/calibration.hpp"
#include "pba/pba_engine.hpp"
#include "pba/testbed.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pba {

// Declarative run configuration: a single JSON tree with a fixed schema.
// Unknown keys are rejected; CLI flags override leaves via dotted paths.
struct RunConfig {
    // paths
    std::string ensemblePath;
    std::string observationsPath;
    std::string outputDir;

    // observation model
    std::vector<double> observedDepths{0.0, 0.25, 0.5, 0.75};
    std::vector<int> observedColumns{0, 1, 2, 3};
    double heldOutDepth = 1.0;
    int heldOutColumn = 4;
    double sigmaESq = 0.0068;

    // designated judgement set and the class partition
    JudgementSet j0 = JudgementSet::default_j0();
    ClassPartition partition = ClassPartition::six_class_default();

    // priors
    double kappaBetaA = 2.9;
    double kappaBetaB = 5.0;
    DiscrepancyPrior discrepancy;
    std::vector<NuggetScenario> nuScenarios = HyperPriors::default_scenario_table();

    // numerical settings
    AnnealConfig anneal;
    McmcConfig finalMcmc;
    McmcConfig replicateMcmc;

    // engine
    int replicateCount = 2000;
    int workers = 1;
    double maxPartialFraction = 0.05;
    std::string crossCovariance = "shrink";  // shrink | keep | zero
    std::string priorPredictive = "judgements";  // judgements | testbed

    // synthetic testbed
    SyntheticModel testbedModel = SyntheticModel::desk_default();
    DesignConfig testbedDesign;

    std::uint64_t masterSeed = 0;

    RunConfig();

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string hash() const;

    // Loads the file, applies dotted-path overrides ("pba.replicates=500"),
    // and validates.
    static RunConfig load(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

    void validate() const;

    ObservationModel observation_model(const Vector& z) const;
    HyperPriors hyper_priors(Eigen::Index dims) const;
    AnalysisConfig analysis_config(Eigen::Index dims) const;
    EngineConfig engine_config() const;
};

// Applies "a.b.c=value" to a JSON tree; the value is parsed as JSON when
// possible and treated as a string otherwise.
void apply_override(nlohmann::json& tree, const std::string& dottedAssignment);

}  // namespace pba
