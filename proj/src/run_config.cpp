#include "pba/run_config.hpp"

#include "pba/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pba {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.count(it.key()) == 0) {
            throw ConfigError("config: unknown key '" +
                              (where.empty() ? it.key() : where + "." + it.key()) + "'");
        }
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

RunConfig::RunConfig() {
    finalMcmc.nSamples = 21000;
    finalMcmc.burnIn = 1000;
    finalMcmc.thin = 20;
    replicateMcmc.nSamples = 6000;
    replicateMcmc.burnIn = 1000;
    replicateMcmc.thin = 10;
    testbedDesign.n = 40;
    testbedDesign.k = 4;
    testbedDesign.method = DesignMethod::KExtendedLatinHypercube;
}

RunConfig RunConfig::from_json(const json& j) {
    require_keys(j, "", {"paths", "observation", "j0", "classes", "priors", "anneal",
                         "mcmc", "pba", "testbed", "masterSeed"});
    RunConfig cfg;

    if (j.contains("paths")) {
        const json& p = j.at("paths");
        require_keys(p, "paths", {"ensemble", "observations", "output"});
        get_if(p, "ensemble", cfg.ensemblePath);
        get_if(p, "observations", cfg.observationsPath);
        get_if(p, "output", cfg.outputDir);
    }

    if (j.contains("observation")) {
        const json& o = j.at("observation");
        require_keys(o, "observation",
                     {"observedDepths", "observedColumns", "heldOutDepth", "heldOutColumn",
                      "sigmaESq"});
        get_if(o, "observedDepths", cfg.observedDepths);
        get_if(o, "observedColumns", cfg.observedColumns);
        get_if(o, "heldOutDepth", cfg.heldOutDepth);
        get_if(o, "heldOutColumn", cfg.heldOutColumn);
        get_if(o, "sigmaESq", cfg.sigmaESq);
    }

    auto parseJudgement = [](const json& o, const std::string& where) {
        require_keys(o, where,
                     {"basis", "family", "kappaPriorScale", "nuPriorScale", "tier", "id"});
        JudgementSet js = JudgementSet::default_j0();
        if (o.contains("id")) js.id = o.at("id").get<std::string>();
        if (o.contains("basis")) js.basis = basis_choice_from_string(o.at("basis"));
        if (o.contains("family")) js.family = family_choice_from_string(o.at("family"));
        get_if(o, "kappaPriorScale", js.kappaPriorScale);
        get_if(o, "nuPriorScale", js.nuPriorScale);
        if (o.contains("tier")) js.tier = tier_from_string(o.at("tier"));
        return js;
    };
    if (j.contains("j0")) cfg.j0 = parseJudgement(j.at("j0"), "j0");

    if (j.contains("classes")) {
        const json& cs = j.at("classes");
        if (!cs.is_array() || cs.empty()) {
            throw ConfigError("config: classes must be a non-empty array");
        }
        cfg.partition.classes.clear();
        for (const json& c : cs) {
            require_keys(c, "classes[]",
                         {"id", "basisOptions", "tierOptions", "familyOptions",
                          "kappaScaleRange", "nuScaleRange", "count"});
            ClassSpec spec;
            spec.classId = c.at("id").get<int>();
            if (c.contains("basisOptions")) {
                spec.basisOptions.clear();
                for (const json& b : c.at("basisOptions")) {
                    spec.basisOptions.push_back(basis_choice_from_string(b));
                }
            } else {
                spec.basisOptions = {BasisChoice::Stepwise10, BasisChoice::Stepwise5};
            }
            if (c.contains("tierOptions")) {
                spec.tierOptions.clear();
                for (const json& t : c.at("tierOptions")) {
                    spec.tierOptions.push_back(tier_from_string(t));
                }
            } else {
                spec.tierOptions = {DiscrepancyTier::Standard, DiscrepancyTier::Medium};
            }
            if (c.contains("familyOptions")) {
                spec.familyOptions.clear();
                for (const json& f : c.at("familyOptions")) {
                    spec.familyOptions.push_back(family_choice_from_string(f));
                }
            }
            if (c.contains("kappaScaleRange")) {
                const auto range = c.at("kappaScaleRange").get<std::vector<double>>();
                if (range.size() != 2) throw ConfigError("kappaScaleRange must be [lo, hi]");
                spec.kappaScaleLo = range[0];
                spec.kappaScaleHi = range[1];
            }
            if (c.contains("nuScaleRange")) {
                const auto range = c.at("nuScaleRange").get<std::vector<double>>();
                if (range.size() != 2) throw ConfigError("nuScaleRange must be [lo, hi]");
                spec.nuScaleLo = range[0];
                spec.nuScaleHi = range[1];
            }
            get_if(c, "count", spec.sampleCount);
            cfg.partition.classes.push_back(std::move(spec));
        }
    }

    if (j.contains("priors")) {
        const json& p = j.at("priors");
        require_keys(p, "priors", {"kappaBeta", "zetaGamma", "etaInvGamma", "nuScenarios"});
        if (p.contains("kappaBeta")) {
            const auto v = p.at("kappaBeta").get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError("priors.kappaBeta must be [a, b]");
            cfg.kappaBetaA = v[0];
            cfg.kappaBetaB = v[1];
        }
        if (p.contains("zetaGamma")) {
            const auto v = p.at("zetaGamma").get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError("priors.zetaGamma must be [a, b]");
            cfg.discrepancy.aZeta = v[0];
            cfg.discrepancy.bZeta = v[1];
        }
        if (p.contains("etaInvGamma")) {
            const auto v = p.at("etaInvGamma").get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError("priors.etaInvGamma must be [a, b]");
            cfg.discrepancy.aEta = v[0];
            cfg.discrepancy.bEta = v[1];
        }
        if (p.contains("nuScenarios")) {
            cfg.nuScenarios.clear();
            for (const json& s : p.at("nuScenarios")) {
                const auto v = s.get<std::vector<double>>();
                if (v.size() != 3) {
                    throw ConfigError("priors.nuScenarios entries must be [r2, a, b]");
                }
                cfg.nuScenarios.push_back({v[0], BetaPrior{v[1], v[2]}});
            }
        }
    }

    if (j.contains("anneal")) {
        const json& a = j.at("anneal");
        require_keys(a, "anneal",
                     {"iterations", "coolingRatio", "proposalScale", "initialAcceptance",
                      "calibrationSamples"});
        get_if(a, "iterations", cfg.anneal.iterations);
        get_if(a, "coolingRatio", cfg.anneal.coolingRatio);
        get_if(a, "proposalScale", cfg.anneal.proposalScale);
        get_if(a, "initialAcceptance", cfg.anneal.initialAcceptance);
        get_if(a, "calibrationSamples", cfg.anneal.calibrationSamples);
    }

    auto parseMcmc = [](const json& m, const std::string& where, McmcConfig& out) {
        require_keys(m, where, {"nSamples", "burnIn", "thin", "pilotSweeps"});
        get_if(m, "nSamples", out.nSamples);
        get_if(m, "burnIn", out.burnIn);
        get_if(m, "thin", out.thin);
        get_if(m, "pilotSweeps", out.pilotSweeps);
    };
    if (j.contains("mcmc")) {
        const json& m = j.at("mcmc");
        require_keys(m, "mcmc", {"final", "replicate"});
        if (m.contains("final")) parseMcmc(m.at("final"), "mcmc.final", cfg.finalMcmc);
        if (m.contains("replicate")) {
            parseMcmc(m.at("replicate"), "mcmc.replicate", cfg.replicateMcmc);
        }
    }

    if (j.contains("pba")) {
        const json& p = j.at("pba");
        require_keys(p, "pba",
                     {"replicates", "workers", "maxPartialFraction", "crossCovariance",
                      "priorPredictive"});
        get_if(p, "replicates", cfg.replicateCount);
        get_if(p, "workers", cfg.workers);
        get_if(p, "maxPartialFraction", cfg.maxPartialFraction);
        get_if(p, "crossCovariance", cfg.crossCovariance);
        get_if(p, "priorPredictive", cfg.priorPredictive);
    }

    if (j.contains("testbed")) {
        const json& t = j.at("testbed");
        require_keys(t, "testbed",
                     {"dims", "depths", "trueXStar", "discrepancyScale", "sigmaESq",
                      "nonlinearity", "design"});
        if (t.contains("dims")) cfg.testbedModel.dims = t.at("dims").get<int>();
        if (t.contains("depths")) {
            const auto d = t.at("depths").get<std::vector<double>>();
            cfg.testbedModel.depths = to_vector(d);
            cfg.testbedModel.depthCount = static_cast<Eigen::Index>(d.size());
        }
        if (t.contains("trueXStar")) {
            cfg.testbedModel.trueXStar = to_vector(t.at("trueXStar").get<std::vector<double>>());
        }
        get_if(t, "discrepancyScale", cfg.testbedModel.discrepancyScale);
        get_if(t, "sigmaESq", cfg.testbedModel.sigmaESq);
        get_if(t, "nonlinearity", cfg.testbedModel.nonlinearity);
        if (t.contains("design")) {
            const json& d = t.at("design");
            require_keys(d, "testbed.design", {"n", "k", "method", "seed"});
            if (d.contains("n")) cfg.testbedDesign.n = d.at("n").get<int>();
            get_if(d, "k", cfg.testbedDesign.k);
            if (d.contains("method")) {
                const std::string m = d.at("method").get<std::string>();
                if (m == "lhc") cfg.testbedDesign.method = DesignMethod::LatinHypercube;
                else if (m == "k-extended") {
                    cfg.testbedDesign.method = DesignMethod::KExtendedLatinHypercube;
                } else {
                    throw ConfigError("testbed.design.method must be 'lhc' or 'k-extended'");
                }
            }
            get_if(d, "seed", cfg.testbedDesign.seed);
        }
    }

    get_if(j, "masterSeed", cfg.masterSeed);
    cfg.validate();
    return cfg;
}

json RunConfig::to_json() const {
    json j;
    j["paths"] = {{"ensemble", ensemblePath},
                  {"observations", observationsPath},
                  {"output", outputDir}};
    j["observation"] = {{"observedDepths", observedDepths},
                        {"observedColumns", observedColumns},
                        {"heldOutDepth", heldOutDepth},
                        {"heldOutColumn", heldOutColumn},
                        {"sigmaESq", sigmaESq}};
    j["j0"] = {{"id", j0.id},
               {"basis", to_string(j0.basis)},
               {"family", to_string(j0.family)},
               {"kappaPriorScale", j0.kappaPriorScale},
               {"nuPriorScale", j0.nuPriorScale},
               {"tier", to_string(j0.tier)}};
    json classes = json::array();
    for (const ClassSpec& c : partition.classes) {
        json basis = json::array();
        for (BasisChoice b : c.basisOptions) basis.push_back(to_string(b));
        json tiers = json::array();
        for (DiscrepancyTier t : c.tierOptions) tiers.push_back(to_string(t));
        json families = json::array();
        for (FamilyChoice f : c.familyOptions) families.push_back(to_string(f));
        classes.push_back({{"id", c.classId},
                           {"basisOptions", basis},
                           {"tierOptions", tiers},
                           {"familyOptions", families},
                           {"kappaScaleRange", {c.kappaScaleLo, c.kappaScaleHi}},
                           {"nuScaleRange", {c.nuScaleLo, c.nuScaleHi}},
                           {"count", c.sampleCount}});
    }
    j["classes"] = classes;
    json scenarios = json::array();
    for (const NuggetScenario& s : nuScenarios) {
        scenarios.push_back({s.r2Threshold, s.prior.a, s.prior.b});
    }
    j["priors"] = {{"kappaBeta", {kappaBetaA, kappaBetaB}},
                   {"zetaGamma", {discrepancy.aZeta, discrepancy.bZeta}},
                   {"etaInvGamma", {discrepancy.aEta, discrepancy.bEta}},
                   {"nuScenarios", scenarios}};
    j["anneal"] = {{"iterations", anneal.iterations},
                   {"coolingRatio", anneal.coolingRatio},
                   {"proposalScale", anneal.proposalScale},
                   {"initialAcceptance", anneal.initialAcceptance},
                   {"calibrationSamples", anneal.calibrationSamples}};
    j["mcmc"] = {{"final",
                  {{"nSamples", finalMcmc.nSamples},
                   {"burnIn", finalMcmc.burnIn},
                   {"thin", finalMcmc.thin},
                   {"pilotSweeps", finalMcmc.pilotSweeps}}},
                 {"replicate",
                  {{"nSamples", replicateMcmc.nSamples},
                   {"burnIn", replicateMcmc.burnIn},
                   {"thin", replicateMcmc.thin},
                   {"pilotSweeps", replicateMcmc.pilotSweeps}}}};
    j["pba"] = {{"replicates", replicateCount},
                {"workers", workers},
                {"maxPartialFraction", maxPartialFraction},
                {"crossCovariance", crossCovariance},
                {"priorPredictive", priorPredictive}};
    std::vector<double> depths(testbedModel.depths.data(),
                               testbedModel.depths.data() + testbedModel.depths.size());
    std::vector<double> xstar(testbedModel.trueXStar.data(),
                              testbedModel.trueXStar.data() + testbedModel.trueXStar.size());
    j["testbed"] = {
        {"dims", testbedModel.dims},
        {"depths", depths},
        {"trueXStar", xstar},
        {"discrepancyScale", testbedModel.discrepancyScale},
        {"sigmaESq", testbedModel.sigmaESq},
        {"nonlinearity", testbedModel.nonlinearity},
        {"design",
         {{"n", testbedDesign.n},
          {"k", testbedDesign.k},
          {"method",
           testbedDesign.method == DesignMethod::LatinHypercube ? "lhc" : "k-extended"},
          {"seed", testbedDesign.seed}}}};
    j["masterSeed"] = masterSeed;
    return j;
}

std::string RunConfig::hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

RunConfig RunConfig::load(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json tree;
    try {
        in >> tree;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    for (const std::string& o : overrides) apply_override(tree, o);
    try {
        return from_json(tree);
    } catch (const json::exception& e) {
        throw ConfigError("invalid config " + path.string() + ": " + e.what());
    }
}

void apply_override(json& tree, const std::string& dottedAssignment) {
    const std::size_t eq = dottedAssignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like path.to.key=value: " + dottedAssignment);
    }
    const std::string pathPart = dottedAssignment.substr(0, eq);
    const std::string valuePart = dottedAssignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(valuePart);
    } catch (const json::exception&) {
        value = valuePart;  // plain string
    }

    json* node = &tree;
    std::istringstream is(pathPart);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(is, key, '.')) keys.push_back(key);
    if (keys.empty()) throw ConfigError("empty override path");
    try {
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
            node = &(*node)[keys[i]];
        }
        (*node)[keys.back()] = value;
    } catch (const json::exception& e) {
        throw ConfigError("cannot apply override '" + dottedAssignment + "': " + e.what());
    }
}

void RunConfig::validate() const {
    if (observedDepths.size() != observedColumns.size() || observedDepths.empty()) {
        throw ConfigError("config: observation depth/column lists must match and be non-empty");
    }
    if (sigmaESq < 0.0) throw ConfigError("config: sigmaESq must be >= 0");
    j0.validate();
    partition.validate();
    discrepancy.validate();
    if (kappaBetaA <= 0.0 || kappaBetaB <= 0.0) {
        throw ConfigError("config: kappaBeta parameters must be > 0");
    }
    for (const NuggetScenario& s : nuScenarios) {
        if (s.prior.a <= 0.0 || s.prior.b <= 0.0) {
            throw ConfigError("config: nugget scenario Beta parameters must be > 0");
        }
    }
    finalMcmc.validate();
    replicateMcmc.validate();
    if (replicateCount < 1) throw ConfigError("config: pba.replicates must be >= 1");
    if (workers < 1) throw ConfigError("config: pba.workers must be >= 1");
    if (crossCovariance != "shrink" && crossCovariance != "keep" && crossCovariance != "zero") {
        throw ConfigError("config: pba.crossCovariance must be shrink, keep or zero");
    }
    if (priorPredictive != "judgements" && priorPredictive != "testbed") {
        throw ConfigError("config: pba.priorPredictive must be 'judgements' or 'testbed'");
    }
}

ObservationModel RunConfig::observation_model(const Vector& z) const {
    ObservationModel m;
    m.observedDepths = Eigen::Map<const Vector>(observedDepths.data(),
                                                static_cast<Eigen::Index>(observedDepths.size()));
    for (int c : observedColumns) m.observedColumns.push_back(c);
    m.heldOutDepth = heldOutDepth;
    m.heldOutColumn = heldOutColumn;
    m.z = z;
    m.sigmaESq = sigmaESq;
    m.validate();
    return m;
}

HyperPriors RunConfig::hyper_priors(Eigen::Index dims) const {
    HyperPriors hp;
    hp.kappaBeta.assign(static_cast<std::size_t>(dims), BetaPrior{kappaBetaA, kappaBetaB});
    hp.scenarioTable = nuScenarios;
    hp.nuBeta = nuScenarios.back().prior;
    return hp;
}

AnalysisConfig RunConfig::analysis_config(Eigen::Index dims) const {
    AnalysisConfig cfg;
    cfg.basePriors = hyper_priors(dims);
    cfg.baseDiscrepancy = discrepancy;
    cfg.anneal = anneal;
    cfg.mcmc = finalMcmc;
    cfg.seed = masterSeed;
    return cfg;
}

EngineConfig RunConfig::engine_config() const {
    EngineConfig e;
    e.replicateCount = replicateCount;
    e.workerCount = workers;
    e.replicateMcmc = replicateMcmc;
    e.finalMcmc = finalMcmc;
    e.maxPartialFraction = maxPartialFraction;
    if (crossCovariance == "keep") e.momentOptions.keepCrossCovariance = true;
    if (crossCovariance == "zero") e.momentOptions.zeroCrossCovariance = true;
    e.masterSeed = masterSeed;
    return e;
}

}  // namespace pba
