// Command line front end: testbed generation, single analyses, full posterior
// belief assessment runs with resume, and report regeneration.

#include "pba/errors.hpp"
#include "pba/persistence.hpp"
#include "pba/run_config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pba;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Exclusive marker preventing concurrent commands on one output directory.
class RunLock {
public:
    explicit RunLock(const fs::path& dir) : path_(dir / ".running") {
        if (fs::exists(path_)) {
            throw ConfigError("output directory is locked by another run: " +
                              path_.string());
        }
        std::ofstream out(path_);
        out << "pid " << ::getpid() << "\n";
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

private:
    fs::path path_;
};

RunConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
    if (!fs::exists(path)) {
        throw ConfigError("config file not found: " + path);
    }
    RunConfig cfg = RunConfig::load(path, sets);
    const char* workersEnv = std::getenv("PBA_WORKERS");
    if (workersEnv != nullptr) {
        cfg.workers = std::max(1, std::atoi(workersEnv));
    }
    return cfg;
}

ObservationModel load_observations(const RunConfig& cfg) {
    if (!fs::exists(cfg.observationsPath)) {
        throw ConfigError("observations file not found: " + cfg.observationsPath);
    }
    Vector depths, z;
    read_observations_csv(cfg.observationsPath, depths, z);
    if (depths.size() != static_cast<Eigen::Index>(cfg.observedDepths.size())) {
        throw ConfigError("observations file row count does not match config depths");
    }
    for (Eigen::Index i = 0; i < depths.size(); ++i) {
        if (std::abs(depths[i] - cfg.observedDepths[static_cast<std::size_t>(i)]) > 1e-9) {
            throw ConfigError("observations file depths do not match config");
        }
    }
    return cfg.observation_model(z);
}

Design load_ensemble(const RunConfig& cfg) {
    if (!fs::exists(cfg.ensemblePath)) {
        throw ConfigError("ensemble file not found: " + cfg.ensemblePath);
    }
    return read_ensemble_csv(cfg.ensemblePath);
}

void write_config_lock(const RunConfig& cfg, const fs::path& dir) {
    std::ofstream out(dir / "config.lock");
    json j = cfg.to_json();
    j["configHash"] = cfg.hash();
    out << j.dump(2) << "\n";
}

int cmd_gen_testbed(const RunConfig& cfg) {
    cfg.testbedModel.validate();
    if (cfg.ensemblePath.empty() || cfg.observationsPath.empty()) {
        throw ConfigError("gen-testbed requires paths.ensemble and paths.observations");
    }
    const Design ensemble = generate_design(cfg.testbedDesign, cfg.testbedModel);
    write_ensemble_csv(cfg.ensemblePath, ensemble);

    const TruthAndObservations truth =
        generate_truth_and_obs(cfg.testbedModel, derive_seed(cfg.masterSeed, 0x0Bu));
    Vector depths(cfg.observedDepths.size());
    Vector z(cfg.observedDepths.size());
    for (std::size_t i = 0; i < cfg.observedDepths.size(); ++i) {
        depths[static_cast<Eigen::Index>(i)] = cfg.observedDepths[i];
        z[static_cast<Eigen::Index>(i)] =
            truth.zAll[cfg.observedColumns[i]];
    }
    write_observations_csv(cfg.observationsPath, depths, z);

    if (!cfg.outputDir.empty()) {
        fs::create_directories(cfg.outputDir);
        json t;
        t["configHash"] = cfg.hash();
        t["trueY"] = std::vector<double>(truth.y.data(), truth.y.data() + truth.y.size());
        t["heldOutTruth"] = truth.y[cfg.heldOutColumn];
        std::ofstream out(fs::path(cfg.outputDir) / "truth.json");
        out << t.dump(2) << "\n";
    }
    std::cout << "wrote " << cfg.ensemblePath << " (" << ensemble.n() << " runs) and "
              << cfg.observationsPath << "\n";
    return kExitOk;
}

int cmd_run_analysis(const RunConfig& cfg, const std::string& judgementId) {
    const Design ensemble = load_ensemble(cfg);
    const ObservationModel model = load_observations(cfg);

    JudgementSet judgement;
    if (judgementId == "J0" || judgementId == cfg.j0.id) {
        judgement = cfg.j0;
        judgement.id = "J0";
    } else {
        bool found = false;
        for (const SampledMember& m : members_for_run(cfg.partition, cfg.masterSeed)) {
            if (m.judgement.id == judgementId) {
                judgement = m.judgement;
                found = true;
                break;
            }
        }
        if (!found) {
            throw ConfigError("unknown judgement id: " + judgementId +
                              " (expected J0 or a sampled member such as C1_m0)");
        }
    }

    fs::create_directories(fs::path(cfg.outputDir) / "chains");
    RunLock lock(cfg.outputDir);
    write_config_lock(cfg, cfg.outputDir);

    AnalysisConfig acfg = cfg.analysis_config(ensemble.dims());
    const FittedJudgement fitted = fit_judgement(judgement, ensemble, model, acfg);
    McmcConfig mcmc = cfg.finalMcmc;
    mcmc.seed = derive_seed(cfg.masterSeed, 0x3Cu);
    const CalibrationChain chain =
        run_mcmc(model, fitted.observedEmulators, fitted.discrepancy, mcmc);
    const PosteriorSummary summary =
        predict_held_out(chain, model, fitted.observedEmulators, fitted.heldOutEmulator);

    write_chain_csv(fs::path(cfg.outputDir) / "chains" / (judgement.id + ".csv"), chain,
                    summary.perStateMeans);
    save_summary_json(fs::path(cfg.outputDir) / ("summary_" + judgement.id + ".json"),
                      summary, cfg.hash(), judgement.id);
    std::cout << "E[y(d5)|z;" << judgement.id << "] = " << format_double(summary.expectation)
              << " (mcse " << format_double(summary.mcse) << ", acceptance "
              << format_double(summary.acceptanceRate) << ")\n";
    return kExitOk;
}

// Deterministic report text from the persisted artifacts only.
std::string render_report(const json& result, const Manifest& manifest) {
    std::ostringstream os;
    const bool partial = !manifest.partial.empty() || !manifest.finished;
    os << "posterior belief assessment report";
    if (partial) os << " [PARTIAL]";
    os << "\n";
    os << "config hash: " << result.at("configHash").get<std::string>() << "\n";
    os << "\n";
    os << "E_G[y]      = " << format_double(result.at("eGy").get<double>()) << "\n";
    os << "E[y|z;J0]   = " << format_double(result.at("eJ0").get<double>()) << "\n";
    os << "adjusted variance by G  = "
       << format_double(result.at("adjustedVariance").get<double>()) << "\n";
    os << "adjusted variance by G1 = "
       << format_double(result.at("adjustedVarianceJ0").get<double>()) << "\n";
    const double bound = result.at("resolutionLowerBound").get<double>();
    os << "resolution lower bound  = " << format_double(bound) << " ("
       << format_double(100.0 * bound) << "%)\n";
    os << "\n";
    os << "coefficients over G (intercept "
       << format_double(result.at("intercept").get<double>()) << "):\n";
    const auto coeffs = result.at("coefficients").get<std::vector<double>>();
    const auto observedG = result.at("observedG").get<std::vector<double>>();
    const auto classes = result.at("classMoments");
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        std::string name = "E[y|z;J0]";
        if (i > 0) {
            name = "E_D[M(C" +
                   std::to_string(classes.at(i - 1).at("classId").get<int>()) + ")]";
        }
        os << "  " << name << " : " << format_double(coeffs[i]) << "  (observed "
           << format_double(observedG[i]) << ")\n";
    }
    os << "\n";
    os << "per-class adjusted means E_D[M(Ci)]:\n";
    const auto means = result.at("adjustedClassMeans").get<std::vector<double>>();
    for (std::size_t i = 0; i < means.size(); ++i) {
        os << "  C" << classes.at(i).at("classId").get<int>() << " : "
           << format_double(means[i]) << "\n";
    }
    os << "\n";
    os << "diagnostics:\n";
    os << "  replicates: " << result.at("replicates").at("complete").get<int>()
       << " complete, " << result.at("replicates").at("partial").get<int>()
       << " partial\n";
    const auto se = result.at("moments").at("seEG").get<std::vector<double>>();
    os << "  moment standard errors of E[G]:";
    for (double s : se) os << " " << format_double(s);
    os << "\n";
    os << "  acceptance rates:";
    for (const auto& a : result.at("observedAnalyses")) {
        os << " " << a.at("id").get<std::string>() << "="
           << format_double(a.at("acceptanceRate").get<double>());
    }
    os << "\n";
    os << "\n";
    os << "artifacts: result.json, replicates.csv, manifest.json, chains/\n";
    return os.str();
}

int write_report_files(const fs::path& outputDir) {
    const fs::path manifestPath = outputDir / "manifest.json";
    const fs::path resultPath = outputDir / "result.json";
    if (!fs::exists(manifestPath)) {
        throw NumericalError("missing artifact: " + manifestPath.string());
    }
    Manifest manifest;
    try {
        manifest = Manifest::load(manifestPath);
    } catch (const ConfigError& e) {
        throw NumericalError(e.what());
    }
    if (!fs::exists(resultPath)) {
        throw NumericalError("missing artifact: " + resultPath.string());
    }
    std::ifstream in(resultPath);
    json result;
    try {
        in >> result;
    } catch (const json::exception& e) {
        throw NumericalError("corrupted artifact " + resultPath.string() + ": " + e.what());
    }
    const std::string text = render_report(result, manifest);
    std::ofstream txt(outputDir / "report.txt");
    txt << text;
    json rj;
    rj["partial"] = !manifest.partial.empty() || !manifest.finished;
    rj["configHash"] = result.at("configHash");
    rj["eGy"] = result.at("eGy");
    rj["eJ0"] = result.at("eJ0");
    rj["adjustedVariance"] = result.at("adjustedVariance");
    rj["adjustedVarianceJ0"] = result.at("adjustedVarianceJ0");
    rj["resolutionLowerBound"] = result.at("resolutionLowerBound");
    rj["coefficients"] = result.at("coefficients");
    rj["adjustedClassMeans"] = result.at("adjustedClassMeans");
    std::ofstream jf(outputDir / "report.json");
    jf << rj.dump(2) << "\n";
    std::cout << text;
    return kExitOk;
}

int cmd_run_pba(const RunConfig& cfg) {
    const Design ensemble = load_ensemble(cfg);
    const ObservationModel model = load_observations(cfg);
    const fs::path outDir(cfg.outputDir);
    fs::create_directories(outDir / "chains");
    RunLock lock(cfg.outputDir);
    write_config_lock(cfg, outDir);

    const std::string configHash = cfg.hash();
    const std::vector<SampledMember> members = members_for_run(cfg.partition, cfg.masterSeed);

    // Resume: reuse completed replicates recorded under the same config hash.
    std::vector<ReplicateRow> preloaded;
    Manifest manifest;
    manifest.configHash = configHash;
    manifest.replicateCount = cfg.replicateCount;
    manifest.memberCount = static_cast<int>(members.size());
    const fs::path manifestPath = outDir / "manifest.json";
    const fs::path replicatesPath = outDir / "replicates.csv";
    if (fs::exists(manifestPath)) {
        const Manifest previous = Manifest::load(manifestPath);
        if (previous.configHash != configHash) {
            throw ConfigError("output directory holds a run with a different config: " +
                              manifestPath.string());
        }
        if (fs::exists(replicatesPath)) {
            for (ReplicateRow& row : read_replicates_csv(replicatesPath, members.size())) {
                if (previous.completed.count(row.replicateId) > 0 ||
                    previous.partial.count(row.replicateId) > 0) {
                    preloaded.push_back(std::move(row));
                }
            }
        }
        manifest.completed = previous.completed;
        manifest.partial = previous.partial;
        std::cout << "resuming: " << preloaded.size() << " replicates already done\n";
    }

    // Rewrite the table from the manifest-backed rows: a crash between a CSV
    // append and the manifest update must not leave orphan rows to duplicate.
    ReplicateCsvWriter writer(replicatesPath, /*append=*/false);
    for (const ReplicateRow& row : preloaded) writer.write_row(row, members);
    auto onReplicate = [&](const ReplicateRow& row) {
        writer.write_row(row, members);
        if (row.complete) {
            manifest.completed.insert(row.replicateId);
        } else {
            manifest.partial.insert(row.replicateId);
        }
        manifest.save(manifestPath);
    };
    // Record preloaded state immediately so an untouched resume still has a manifest.
    manifest.save(manifestPath);

    AnalysisConfig acfg = cfg.analysis_config(ensemble.dims());
    EngineConfig engine = cfg.engine_config();

    std::optional<PriorPredictive> testbedPp;
    if (cfg.priorPredictive == "testbed") {
        testbedPp = PriorPredictive::from_testbed(cfg.testbedModel, model);
    }

    const PbaRunResult result =
        run_pba(ensemble, model, cfg.j0, cfg.partition, acfg, engine, preloaded,
                onReplicate, testbedPp ? &*testbedPp : nullptr);

    for (const GRow& g : result.gRows) {
        manifest.completed.insert(g.replicateId);
    }
    manifest.finished = true;
    manifest.save(manifestPath);

    PbaRunResult withHash = result;
    withHash.pba.configHash = configHash;
    save_result_json(outDir / "result.json", withHash, configHash);
    for (const AnalysisRecord& rec : result.observedAnalyses) {
        write_chain_csv(outDir / "chains" / (rec.id + ".csv"), rec.chain,
                        rec.summary.perStateMeans);
    }
    return write_report_files(outDir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posterior belief assessment over ensembles of Bayesian analyses"};
    app.require_subcommand(1);

    std::string configPath;
    std::vector<std::string> sets;
    std::string judgementId = "J0";
    std::string outputDir;

    CLI::App* gen = app.add_subcommand("gen-testbed",
                                       "generate a synthetic ensemble and observations");
    gen->add_option("--config", configPath, "run configuration file")->required();
    gen->add_option("--set", sets, "override a config leaf, e.g. pba.replicates=200");

    CLI::App* runAnalysis =
        app.add_subcommand("run-analysis", "run one Bayesian analysis end to end");
    runAnalysis->add_option("--config", configPath, "run configuration file")->required();
    runAnalysis->add_option("--judgement", judgementId,
                            "judgement id (J0 or a sampled member id)");
    runAnalysis->add_option("--set", sets, "override a config leaf");

    CLI::App* runPba = app.add_subcommand("run-pba",
                                          "full posterior belief assessment with resume");
    runPba->add_option("--config", configPath, "run configuration file")->required();
    runPba->add_option("--set", sets, "override a config leaf");

    CLI::App* report = app.add_subcommand("report",
                                          "regenerate the report from persisted artifacts");
    report->add_option("--output", outputDir, "output directory of a previous run")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen_testbed(load_config(configPath, sets));
        if (runAnalysis->parsed()) {
            return cmd_run_analysis(load_config(configPath, sets), judgementId);
        }
        if (runPba->parsed()) return cmd_run_pba(load_config(configPath, sets));
        if (report->parsed()) return write_report_files(outputDir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ArgumentError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitConfig;
}
