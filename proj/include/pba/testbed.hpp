#pragma once

#include "pba/emulator.hpp"
#include "pba/linalg.hpp"
#include "pba/rng.hpp"

#include <cstdint>
#include <functional>

namespace pba {

// Cheap deterministic stand-in for an expensive simulator: a smooth response
// over inputs in [0,1]^r evaluated at a handful of depths, plus a fixed
// smooth discrepancy between the simulator at its best input and "reality".
struct SyntheticModel {
    Eigen::Index dims = 3;
    Eigen::Index depthCount = 5;
    Vector depths;           // depth coordinates on unit scale
    Vector trueXStar;        // in [0,1]^r
    double discrepancyScale = 0.05;
    double sigmaESq = 0.0068;
    double nonlinearity = 0.6;

    void validate() const;

    // Deterministic evaluator f(x, depthIndex).
    double evaluate(const Vector& x, Eigen::Index depthIndex) const;
    // Fixed smooth discrepancy over depth.
    double true_discrepancy(Eigen::Index depthIndex) const;

    static SyntheticModel desk_default();
};

enum class DesignMethod { LatinHypercube, KExtendedLatinHypercube };

struct DesignConfig {
    Eigen::Index n = 40;
    DesignMethod method = DesignMethod::KExtendedLatinHypercube;
    int k = 4;  // number of sub-hypercubes for the k-extended method
    std::uint64_t seed = 0;

    void validate() const;
};

// Space-filling design on [0,1]^r. For the k-extended method, each of the k
// sub-designs of size n/k is itself a Latin hypercube and their union has one
// point in every 1/n stratum per dimension.
Matrix generate_design_points(const DesignConfig& cfg, Eigen::Index dims);

// Designs evaluated through the synthetic model, one output column per depth.
Design generate_design(const DesignConfig& cfg, const SyntheticModel& model);

struct TruthAndObservations {
    Vector y;      // true value per depth
    Vector zAll;   // noisy observation per depth
};

// y(d) = f(trueXStar, d) + discrepancy(d); z = y + N(0, sigmaESq) per depth.
TruthAndObservations generate_truth_and_obs(const SyntheticModel& model,
                                            std::uint64_t seed);

// Fresh truth draw with a random best input (and the fixed discrepancy),
// used for prior-predictive sampling and dominance checks.
TruthAndObservations sample_truth(const SyntheticModel& model, std::uint64_t seed);

}  // namespace pba
