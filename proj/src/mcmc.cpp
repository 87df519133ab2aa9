#include "pba/mcmc.hpp"

#include "pba/errors.hpp"

#include <cmath>
#include <limits>

namespace pba {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double to_transformed(CoordinateTransform t, double x) {
    switch (t) {
        case CoordinateTransform::Identity: return x;
        case CoordinateTransform::Logit: return std::log(x / (1.0 - x));
        case CoordinateTransform::Log: return std::log(x);
    }
    return x;
}

double from_transformed(CoordinateTransform t, double z) {
    switch (t) {
        case CoordinateTransform::Identity: return z;
        case CoordinateTransform::Logit: return 1.0 / (1.0 + std::exp(-z));
        case CoordinateTransform::Log: return std::exp(z);
    }
    return z;
}

// log |dx/dz| for the density correction on the transformed scale.
double log_jacobian(CoordinateTransform t, double x) {
    switch (t) {
        case CoordinateTransform::Identity: return 0.0;
        case CoordinateTransform::Logit: {
            if (x <= 0.0 || x >= 1.0) return -kInf;
            return std::log(x) + std::log1p(-x);
        }
        case CoordinateTransform::Log: {
            if (x <= 0.0) return -kInf;
            return std::log(x);
        }
    }
    return 0.0;
}

}  // namespace

void McmcConfig::validate() const {
    if (nSamples <= burnIn) throw ArgumentError("McmcConfig: nSamples must exceed burnIn");
    if (burnIn < 0) throw ArgumentError("McmcConfig: burnIn must be >= 0");
    if (thin < 1) throw ArgumentError("McmcConfig: thin must be >= 1");
    if (proposalScales.size() > 0 && (proposalScales.array() <= 0.0).any()) {
        throw ArgumentError("McmcConfig: proposal scales must be positive");
    }
}

McmcChain rw_metropolis(const std::function<double(const Vector&)>& logDensity,
                        const Vector& init,
                        const std::vector<CoordinateTransform>& transforms,
                        const McmcConfig& config) {
    config.validate();
    const Eigen::Index dim = init.size();
    if (static_cast<Eigen::Index>(transforms.size()) != dim) {
        throw ArgumentError("rw_metropolis: one transform per coordinate required");
    }

    Vector scales = config.proposalScales.size() > 0 ? config.proposalScales
                                                     : Vector::Constant(dim, 0.5);
    if (scales.size() != dim) {
        throw ArgumentError("rw_metropolis: proposal scale dimension mismatch");
    }

    Vector x = init;
    Vector z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = to_transformed(transforms[i], x[i]);

    auto transformed_density = [&](const Vector& state) {
        double value = logDensity(state);
        if (!std::isfinite(value)) return -kInf;
        for (Eigen::Index i = 0; i < dim; ++i) {
            value += log_jacobian(transforms[i], state[i]);
        }
        return value;
    };

    double current = transformed_density(x);
    if (!std::isfinite(current)) {
        throw NumericalError("rw_metropolis: log density not finite at the initial state");
    }

    Rng rng = make_rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto sweep = [&](Vector& zState, Vector& xState, double& logValue,
                     Eigen::VectorXi* acceptCount) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double zOld = zState[i];
            const double xOld = xState[i];
            zState[i] = zOld + scales[i] * normal(rng);
            xState[i] = from_transformed(transforms[i], zState[i]);
            const double proposal = transformed_density(xState);
            const double delta = proposal - logValue;
            if (delta >= 0.0 || unif(rng) < std::exp(delta)) {
                logValue = proposal;
                if (acceptCount) (*acceptCount)[i] += 1;
            } else {
                zState[i] = zOld;
                xState[i] = xOld;
            }
        }
    };

    // Pilot phase: adapt per-coordinate scales towards the target band, then
    // freeze so the recorded chain is Markovian.
    if (config.pilotSweeps > 0) {
        Eigen::VectorXi accepts = Eigen::VectorXi::Zero(dim);
        int windowSweeps = 0;
        for (int s = 0; s < config.pilotSweeps; ++s) {
            sweep(z, x, current, &accepts);
            ++windowSweeps;
            if (windowSweeps == config.adaptWindow || s + 1 == config.pilotSweeps) {
                for (Eigen::Index i = 0; i < dim; ++i) {
                    const double rate =
                        static_cast<double>(accepts[i]) / static_cast<double>(windowSweeps);
                    if (rate > config.targetHigh) scales[i] *= 1.4;
                    if (rate < config.targetLow) scales[i] *= 0.7;
                }
                accepts.setZero();
                windowSweeps = 0;
            }
        }
    }

    McmcChain chain;
    chain.frozenScales = scales;
    chain.states.resize(config.retained(), dim);

    Eigen::Index stored = 0;
    for (int s = 0; s < config.nSamples; ++s) {
        Eigen::VectorXi accepts = Eigen::VectorXi::Zero(dim);
        sweep(z, x, current, &accepts);
        chain.proposed += dim;
        chain.accepted += accepts.sum();
        if (s >= config.burnIn && (s - config.burnIn) % config.thin == 0 &&
            stored < chain.states.rows()) {
            chain.states.row(stored++) = x.transpose();
        }
    }
    chain.states.conservativeResize(stored, dim);
    chain.acceptanceRate =
        chain.proposed > 0
            ? static_cast<double>(chain.accepted) / static_cast<double>(chain.proposed)
            : 0.0;
    if (chain.accepted == 0) {
        throw NumericalError("rw_metropolis: zero acceptance over the recorded run");
    }
    return chain;
}

}  // namespace pba
