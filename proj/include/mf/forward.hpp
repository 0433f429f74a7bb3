#pragma once

#include "mf/coeffs.hpp"
#include "mf/grid.hpp"

namespace mf {

struct SimOptions {
    ParticleEnsemble::Storage storage = ParticleEnsemble::Storage::full;
    // |b*dt| is clamped to clamp_factor*dt*(1+|x|); explicit steps can
    // overshoot under one-sided Lipschitz drifts. Clamps are counted,
    // never silent.
    double clamp_factor = 10.0;
};

struct SimDiagnostics {
    long clamped_updates = 0;
};

// Interacting-particle Euler-Maruyama for dX = b(t,X,law) dt + sigma dW;
// the law argument is the empirical measure of the particle cloud at the
// step start. Deterministic given (seed, N, M) for any worker count.
ParticleEnsemble simulate_mkv(const SdeCoefficientSpec& spec, double x0, const TimeGrid& grid,
                              const NoiseBank& noise, const SimOptions& opts = {},
                              SimDiagnostics* diag = nullptr);

// Controlled dynamics with the (H1) drift split
// b = b0(t,x,centered law,u) + b1(t,mean,centered law).
ParticleEnsemble simulate_controlled(const ControlProblemSpec& problem, const ControlGrid& u,
                                     const TimeGrid& grid, const NoiseBank& noise,
                                     const SimOptions& opts = {}, SimDiagnostics* diag = nullptr);

// First-order sensitivity of the state to the control perturbation
// ustar + theta*v, driven by the same noise as xstar. Z_0 = 0. The
// mean-field term is a particle average over the centered copies, with
// an O(N) path when the mu-kernels are constant in y.
ParticleEnsemble simulate_variational(const ControlProblemSpec& problem, const ControlGrid& ustar,
                                      const ControlGrid& v, const ParticleEnsemble& xstar,
                                      const NoiseBank& noise);

struct MomentReport {
    double sup_moment = 0.0;
    bool finite = false;
};

// sup over grid columns of the empirical E|X|^p, p in {2,4,8}.
MomentReport moment_report(const ParticleEnsemble& ensemble, int p);

}  // namespace mf
