#pragma once

#include "pba/linalg.hpp"
#include "pba/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace pba {

// Per-coordinate reparameterization for the random walk. Proposals are
// Gaussian on the transformed coordinate; the Jacobian correction keeps the
// chain targeting the original-space density.
enum class CoordinateTransform { Identity, Logit, Log };

struct McmcConfig {
    int nSamples = 6000;  // total recorded sweeps, including burn-in
    int burnIn = 1000;
    int thin = 10;
    Vector proposalScales;  // per transformed coordinate; empty means 0.5 each
    std::uint64_t seed = 0;
    // Pre-burn-in pilot: scales adapt towards the target acceptance band and
    // are frozen before the recorded chain starts. 0 disables adaptation.
    int pilotSweeps = 500;
    int adaptWindow = 50;
    double targetLow = 0.2;
    double targetHigh = 0.4;

    void validate() const;
    Eigen::Index retained() const {
        return static_cast<Eigen::Index>((nSamples - burnIn) / thin);
    }
};

struct McmcChain {
    Matrix states;          // retained x dim, original space
    double acceptanceRate = 0.0;
    std::int64_t proposed = 0;
    std::int64_t accepted = 0;
    Vector frozenScales;
};

// Single-site random walk Metropolis over the transformed coordinates, swept
// in order each iteration. Deterministic given the seed. Raises
// NumericalError if nothing is accepted over the recorded run.
McmcChain rw_metropolis(const std::function<double(const Vector&)>& logDensity,
                        const Vector& init,
                        const std::vector<CoordinateTransform>& transforms,
                        const McmcConfig& config);

}  // namespace pba
