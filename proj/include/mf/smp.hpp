#pragma once

#include "mf/backward.hpp"
#include "mf/coeffs.hpp"
#include "mf/forward.hpp"

namespace mf {

// H = b~(t,x,m,centered mu,u) p + sigma(t,x,mu,u) q + f(t,x,mu,u);
// the drift receives the centered law, sigma and f the full one.
double hamiltonian(const ControlProblemSpec& problem, double t, double x, double mean,
                   const EmpiricalMeasure& centered, const EmpiricalMeasure& full,
                   std::span<const double> u, double p, double q);

// J(u) = E[ sum_k f(t_k, X, mu_k, u_k) dt + h(X_T, mu_T) ] over the particles
// of an ensemble produced by simulate_controlled with this u.
double cost(const ControlProblemSpec& problem, const ParticleEnsemble& ensemble, const ControlGrid& u);

// Same value plus the particle standard error of the estimate.
struct CostEstimate {
    double value = 0.0;
    double std_error = 0.0;
};
CostEstimate cost_with_error(const ControlProblemSpec& problem, const ParticleEnsemble& ensemble,
                             const ControlGrid& u);

// Per-time-step expectation of H_u: grad[k*m+j] = E[f_u + p b~_u + q sigma_u].
std::vector<double> cost_gradient(const ControlProblemSpec& problem, const ParticleEnsemble& ensemble,
                                  const AdjointSolution& adjoint, const ControlGrid& u);

struct OptimizeOptions {
    int particles = 1000;
    std::uint64_t seed = 1;
    bool antithetic = true;
    int max_iters = 50;
    double tol = 1e-3;            // sup-norm of the projected gradient step
    double step0 = 1.0;
    double armijo_c = 1e-4;
    double step_shrink = 0.5;
    int max_backtracks = 40;
    bool fresh_noise = true;      // new seed per outer iteration
    int nonmonotone_limit = 5;    // consecutive noise-adjusted cost increases before aborting
    RegressionConfig regression;
    SimOptions sim;
};

struct OptimizationReport {
    std::vector<double> cost_history;
    std::vector<double> grad_norm_history;
    std::vector<double> residual_history;  // variational-inequality residual per iteration
    std::vector<double> step_history;
    ControlGrid final_control;
    double final_cost = 0.0;       // fresh-noise evaluation at the final control
    double final_residual = 0.0;   // variational-inequality residual, fresh noise
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

// Projected gradient descent over the box U with Armijo backtracking.
// The line search reuses one noise bank; outer iterations redraw it
// unless fresh_noise is off.
OptimizationReport optimize(const ControlProblemSpec& problem, const ControlGrid& u0,
                            const TimeGrid& grid, const OptimizeOptions& opts);

struct SmpResidualReport {
    double residual = 0.0;                 // -min(0, worst inner product)
    double worst_inner = 0.0;              // min over steps and box vertices of E[H_u](u - u_k)
    int worst_step = -1;
    std::vector<double> hu;                // M x m per-step expected H_u
};

// Necessary-condition check: for each step the inner product
// E[H_u](t_k) . (u - u_k) is minimized over the box vertices
// (component-separable for a box).
SmpResidualReport smp_residual(const ControlProblemSpec& problem, const ParticleEnsemble& xstar,
                               const ControlGrid& ustar, const AdjointSolution& adjoint);

struct DualityReport {
    double lhs = 0.0;  // E[p_T Z_T]
    double rhs = 0.0;  // the adjoint-variational integral
    double abs_gap = 0.0;
    double rel_gap = 0.0;
    double std_error = 0.0;  // particle std error of the gap
};

// Duality between the adjoint pair and the variational process along a
// direction v; Z is simulated internally with the same noise bank.
DualityReport duality_check(const ControlProblemSpec& problem, const ParticleEnsemble& xstar,
                            const ControlGrid& ustar, const AdjointSolution& adjoint,
                            const ControlGrid& v, const NoiseBank& noise);

struct ConvexityReport {
    int violations_hamiltonian = 0;
    int violations_terminal = 0;
    int segments = 0;
    double worst_violation = 0.0;
    bool pass = false;
};

// Midpoint-convexity probe of H in (x, m, u) at fixed laws and random
// (p, q), and of h along entrywise-interpolated sample clouds.
ConvexityReport sufficiency_probe(const ControlProblemSpec& problem, int segments, std::uint64_t seed);

}  // namespace mf
