#include "pba/testbed.hpp"

#include "pba/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace pba {

void SyntheticModel::validate() const {
    if (dims < 1) throw ArgumentError("SyntheticModel: dims must be >= 1");
    if (depthCount < 2) throw ArgumentError("SyntheticModel: needs >= 2 depths");
    if (depths.size() != depthCount) {
        throw ArgumentError("SyntheticModel: depth coordinates missing");
    }
    if (trueXStar.size() != dims || trueXStar.minCoeff() < 0.0 ||
        trueXStar.maxCoeff() > 1.0) {
        throw ArgumentError("SyntheticModel: trueXStar must lie in [0,1]^r");
    }
    if (sigmaESq < 0.0) throw ArgumentError("SyntheticModel: sigmaESq must be >= 0");
}

double SyntheticModel::evaluate(const Vector& x, Eigen::Index depthIndex) const {
    if (x.size() != dims || depthIndex < 0 || depthIndex >= depthCount) {
        throw ArgumentError("SyntheticModel::evaluate: bad arguments");
    }
    const double d = depths[depthIndex];
    // Smooth depth profile modulating a low-order response with one
    // nonlinear term; roughly temperature-like in scale.
    double value = 3.0 - 1.8 * d + 0.7 * d * d;
    value += (1.2 - 0.8 * d) * (x[0] - 0.5);
    if (dims > 1) value += (0.9 + 0.4 * d) * (x[1] - 0.5) * (x[1] - 0.5) * 2.0 - 0.45;
    if (dims > 2) value += 0.5 * (x[2] - 0.5) * (1.0 - d);
    value += nonlinearity * std::sin(M_PI * (x[0] + 0.5 * d));
    if (dims > 1) value += 0.3 * nonlinearity * std::cos(M_PI * x[1] * (1.0 + d));
    return value;
}

double SyntheticModel::true_discrepancy(Eigen::Index depthIndex) const {
    const double d = depths[depthIndex];
    return discrepancyScale * std::sin(2.0 * M_PI * d + 0.4);
}

SyntheticModel SyntheticModel::desk_default() {
    SyntheticModel m;
    m.dims = 3;
    m.depthCount = 5;
    m.depths = Vector::LinSpaced(5, 0.0, 1.0);
    m.trueXStar = Vector::Zero(3);
    m.trueXStar << 0.35, 0.62, 0.48;
    return m;
}

void DesignConfig::validate() const {
    if (n < 1) throw ArgumentError("DesignConfig: n must be >= 1");
    const int kk = method == DesignMethod::KExtendedLatinHypercube ? k : 1;
    if (kk < 1) throw ArgumentError("DesignConfig: k must be >= 1");
    if (n % kk != 0) {
        throw ConfigError("DesignConfig: n must be divisible by k for a k-extension");
    }
}

Matrix generate_design_points(const DesignConfig& cfg, Eigen::Index dims) {
    cfg.validate();
    if (dims < 1) throw ArgumentError("generate_design_points: dims must be >= 1");
    const Eigen::Index n = cfg.n;
    const int k = cfg.method == DesignMethod::KExtendedLatinHypercube ? cfg.k : 1;
    const Eigen::Index m = n / k;  // points per sub-design

    Rng rng = make_rng(derive_seed(cfg.seed, 0xD51u));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // For each dimension and coarse stratum, deal the k fine strata inside it
    // to the k sub-designs; each sub-design is then a Latin hypercube on the
    // m coarse strata and the union covers all n fine strata.
    Matrix points(n, dims);
    for (Eigen::Index dim = 0; dim < dims; ++dim) {
        std::vector<std::vector<int>> fineFor(static_cast<std::size_t>(k),
                                              std::vector<int>(static_cast<std::size_t>(m)));
        std::vector<int> deal(static_cast<std::size_t>(k));
        for (Eigen::Index c = 0; c < m; ++c) {
            std::iota(deal.begin(), deal.end(), 0);
            std::shuffle(deal.begin(), deal.end(), rng);
            for (int s = 0; s < k; ++s) {
                fineFor[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] =
                    static_cast<int>(c) * k + deal[static_cast<std::size_t>(s)];
            }
        }
        for (int s = 0; s < k; ++s) {
            std::vector<int> order(static_cast<std::size_t>(m));
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            for (Eigen::Index p = 0; p < m; ++p) {
                const int fine =
                    fineFor[static_cast<std::size_t>(s)][static_cast<std::size_t>(order[p])];
                const double u = unif(rng);
                points(s * m + p, dim) =
                    (static_cast<double>(fine) + u) / static_cast<double>(n);
            }
        }
    }
    return points;
}

Design generate_design(const DesignConfig& cfg, const SyntheticModel& model) {
    model.validate();
    Design design;
    design.points = generate_design_points(cfg, model.dims);
    design.outputs.resize(design.points.rows(), model.depthCount);
    for (Eigen::Index i = 0; i < design.points.rows(); ++i) {
        const Vector x = design.points.row(i).transpose();
        for (Eigen::Index d = 0; d < model.depthCount; ++d) {
            design.outputs(i, d) = model.evaluate(x, d);
        }
    }
    design.validate();
    return design;
}

namespace {

TruthAndObservations truth_at(const SyntheticModel& model, const Vector& xStar,
                              Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    TruthAndObservations t;
    t.y.resize(model.depthCount);
    t.zAll.resize(model.depthCount);
    const double sd = std::sqrt(model.sigmaESq);
    for (Eigen::Index d = 0; d < model.depthCount; ++d) {
        t.y[d] = model.evaluate(xStar, d) + model.true_discrepancy(d);
        t.zAll[d] = t.y[d] + sd * normal(rng);
    }
    return t;
}

}  // namespace

TruthAndObservations generate_truth_and_obs(const SyntheticModel& model,
                                            std::uint64_t seed) {
    model.validate();
    Rng rng = make_rng(derive_seed(seed, 0x7Bu));
    return truth_at(model, model.trueXStar, rng);
}

TruthAndObservations sample_truth(const SyntheticModel& model, std::uint64_t seed) {
    model.validate();
    Rng rng = make_rng(derive_seed(seed, 0x7Cu));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector xStar(model.dims);
    for (Eigen::Index i = 0; i < model.dims; ++i) xStar[i] = unif(rng);
    return truth_at(model, xStar, rng);
}

}  // namespace pba
