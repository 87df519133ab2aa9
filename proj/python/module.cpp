#include "pba/bayes_linear.hpp"
#include "pba/errors.hpp"
#include "pba/calibration.hpp"
#include "pba/emulator.hpp"
#include "pba/exchangeability.hpp"
#include "pba/mcmc.hpp"
#include "pba/pba_engine.hpp"
#include "pba/testbed.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pba;

namespace {

CorrelationFamily family_from(const std::string& name) {
    if (name == "power_exponential") return CorrelationFamily::PowerExponential;
    if (name == "matern32") return CorrelationFamily::Matern32;
    if (name == "matern52") return CorrelationFamily::Matern52;
    throw ArgumentError("unknown correlation family: " + name);
}

CorrelationSpec make_spec(const std::string& family, double power, const Vector& kappa,
                          double nugget) {
    CorrelationSpec s;
    s.family = family_from(family);
    s.power = power;
    s.kappa = kappa;
    s.nugget = nugget;
    s.validate();
    return s;
}

}  // namespace

PYBIND11_MODULE(_pbacore, m) {
    m.doc() = "posterior belief assessment core: Bayes linear adjustment, "
              "co-exchangeable classes, GP emulation and calibration";

    // ---- Bayes linear ----
    m.def(
        "adjust",
        [](const Vector& meanB, const Matrix& varB, const Vector& meanD,
           const Matrix& varD, const Matrix& cross, const Vector& observed) {
            JointSpec joint(BeliefSpec(meanB, varB), BeliefSpec(meanD, varD), cross);
            const AdjustmentResult r = adjust(joint, observed);
            py::dict out;
            out["mean"] = r.adjustedMean;
            out["variance"] = r.adjustedVariance;
            out["weights"] = r.weights;
            out["intercept"] = r.intercept;
            out["resolved"] = r.resolvedVariance;
            out["resolution"] = r.resolutionRatio;
            return out;
        },
        py::arg("mean_b"), py::arg("var_b"), py::arg("mean_d"), py::arg("var_d"),
        py::arg("cross_cov"), py::arg("observed"),
        "Bayes linear adjustment of block B by observed block D");

    m.def(
        "adjust_expectation",
        [](const Vector& meanB, const Matrix& varB, const Vector& meanD,
           const Matrix& varD, const Matrix& cross, const Vector& observed) {
            JointSpec joint(BeliefSpec(meanB, varB), BeliefSpec(meanD, varD), cross);
            return adjust_expectation(joint, observed);
        },
        py::arg("mean_b"), py::arg("var_b"), py::arg("mean_d"), py::arg("var_d"),
        py::arg("cross_cov"), py::arg("observed"));

    m.def(
        "adjust_variance",
        [](const Vector& meanB, const Matrix& varB, const Vector& meanD,
           const Matrix& varD, const Matrix& cross) {
            JointSpec joint(BeliefSpec(meanB, varB), BeliefSpec(meanD, varD), cross);
            return adjust_variance(joint);
        },
        py::arg("mean_b"), py::arg("var_b"), py::arg("mean_d"), py::arg("var_d"),
        py::arg("cross_cov"));

    m.def("pseudo_inverse", &pseudo_inverse, py::arg("matrix"), py::arg("rel_tol") = 1e-10);
    m.def("resolution_ratio", &resolution_ratio, py::arg("prior_var"),
          py::arg("adjusted_var_a"), py::arg("adjusted_var_b"));

    // ---- correlation / emulator ----
    m.def(
        "correlation",
        [](const Vector& x, const Vector& x2, const std::string& family, double power,
           const Vector& kappa, double nugget) {
            return correlation(x, x2, make_spec(family, power, kappa, nugget));
        },
        py::arg("x"), py::arg("x2"), py::arg("family") = "power_exponential",
        py::arg("power") = 2.0, py::arg("kappa"), py::arg("nugget") = 0.0);

    m.def(
        "half_length_to_kappa",
        [](double rho, const std::string& family, double power, double halfRange) {
            return half_length_to_kappa(rho, family_from(family), power, halfRange);
        },
        py::arg("rho"), py::arg("family") = "power_exponential", py::arg("power") = 2.0,
        py::arg("half_range") = 0.5);

    py::class_<Prediction>(m, "Prediction")
        .def_readonly("mean", &Prediction::mean)
        .def_readonly("variance", &Prediction::variance);

    py::class_<EmulatorPosterior>(m, "Emulator")
        .def_property_readonly("dof", [](const EmulatorPosterior& em) { return em.dof; })
        .def_property_readonly("sigma_hat_sq",
                               [](const EmulatorPosterior& em) { return em.sigmaHatSq; })
        .def("predict",
             [](const EmulatorPosterior& em, const Vector& x) { return predict(em, x); })
        .def("predict_mean", [](const EmulatorPosterior& em, const Vector& x) {
            return predict_mean(em, x);
        });

    m.def(
        "fit_emulator",
        [](const Matrix& points, const Vector& outputs, const std::string& basis,
           const std::string& family, double power, const Vector& kappa, double nugget) {
            Design d;
            d.points = points;
            d.outputs = outputs;
            BasisSpec b;
            if (basis == "constant") {
                b = BasisSpec::constant(points.cols());
            } else if (basis == "linear") {
                b = BasisSpec::linear_all(points.cols());
            } else {
                throw ArgumentError("basis must be 'constant' or 'linear'");
            }
            return fit_emulator(d, 0, b, make_spec(family, power, kappa, nugget));
        },
        py::arg("points"), py::arg("outputs"), py::arg("basis") = "constant",
        py::arg("family") = "power_exponential", py::arg("power") = 2.0,
        py::arg("kappa"), py::arg("nugget") = 0.0,
        "Reference-prior conjugate GP fit of one output column");

    m.def(
        "select_basis",
        [](const Matrix& points, const Vector& outputs, const std::string& policy,
           double dfFraction, double deleteThreshold) {
            Design d;
            d.points = points;
            d.outputs = outputs;
            BasisPolicy p;
            if (policy == "constant") p.kind = BasisPolicyKind::Constant;
            else if (policy == "linear") p.kind = BasisPolicyKind::LinearAll;
            else if (policy == "stepwise") p.kind = BasisPolicyKind::Stepwise;
            else throw ArgumentError("policy must be constant, linear or stepwise");
            p.dfFraction = dfFraction;
            p.deleteThreshold = deleteThreshold;
            const BasisSelection sel = select_basis(d, 0, p);
            py::dict out;
            out["terms"] = sel.basis.terms;
            out["r2"] = sel.olsR2;
            out["description"] = sel.basis.describe();
            return out;
        },
        py::arg("points"), py::arg("outputs"), py::arg("policy") = "stepwise",
        py::arg("df_fraction") = 0.10, py::arg("delete_threshold") = 0.001);

    // ---- exchangeability ----
    m.def(
        "adjust_class_means",
        [](const std::vector<py::dict>& classes, const std::vector<std::pair<int, int>>& labels,
           const Vector& observed) {
            std::vector<ClassMoments> moments;
            for (const py::dict& c : classes) {
                ClassMoments cm;
                cm.classId = c["class_id"].cast<int>();
                cm.meanM = c["mean"].cast<Vector>();
                cm.varM = c["var_m"].cast<Matrix>();
                cm.varResidual = c["var_residual"].cast<Matrix>();
                moments.push_back(std::move(cm));
            }
            std::vector<AnalysisLabel> ls;
            for (const auto& [cid, mid] : labels) ls.push_back({cid, mid});
            const JointSpec joint = build_joint_D(moments, ls);
            return adjust_class_means(joint, observed);
        },
        py::arg("classes"), py::arg("labels"), py::arg("observed"),
        "Jointly adjusted class means under co-exchangeability");

    // ---- sampling ----
    m.def(
        "rw_metropolis",
        [](const std::function<double(const Vector&)>& logDensity, const Vector& init,
           int nSamples, int burnIn, int thin, std::uint64_t seed, int pilotSweeps) {
            McmcConfig cfg;
            cfg.nSamples = nSamples;
            cfg.burnIn = burnIn;
            cfg.thin = thin;
            cfg.seed = seed;
            cfg.pilotSweeps = pilotSweeps;
            const std::vector<CoordinateTransform> transforms(
                static_cast<std::size_t>(init.size()), CoordinateTransform::Identity);
            const McmcChain chain = rw_metropolis(logDensity, init, transforms, cfg);
            py::dict out;
            out["states"] = chain.states;
            out["acceptance_rate"] = chain.acceptanceRate;
            return out;
        },
        py::arg("log_density"), py::arg("init"), py::arg("n_samples") = 2000,
        py::arg("burn_in") = 500, py::arg("thin") = 1, py::arg("seed") = 0,
        py::arg("pilot_sweeps") = 200,
        "Single-site random walk Metropolis on unconstrained coordinates");

    // ---- testbed ----
    m.def(
        "generate_design_points",
        [](Eigen::Index n, int k, Eigen::Index dims, std::uint64_t seed) {
            DesignConfig cfg;
            cfg.n = n;
            cfg.k = k;
            cfg.method = k > 1 ? DesignMethod::KExtendedLatinHypercube
                               : DesignMethod::LatinHypercube;
            cfg.seed = seed;
            return generate_design_points(cfg, dims);
        },
        py::arg("n"), py::arg("k") = 1, py::arg("dims") = 1, py::arg("seed") = 0,
        "k-extended Latin hypercube on [0,1]^dims");

    m.def(
        "testbed_ensemble",
        [](Eigen::Index n, int k, Eigen::Index dims, std::uint64_t seed) {
            SyntheticModel model = SyntheticModel::desk_default();
            model.dims = dims;
            model.trueXStar = Vector::Constant(dims, 0.5);
            DesignConfig cfg;
            cfg.n = n;
            cfg.k = k;
            cfg.seed = seed;
            const Design d = generate_design(cfg, model);
            return py::make_tuple(d.points, d.outputs);
        },
        py::arg("n") = 40, py::arg("k") = 4, py::arg("dims") = 3, py::arg("seed") = 0,
        "synthetic simulator ensemble (points, outputs per depth)");
}
