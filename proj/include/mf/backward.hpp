#pragma once

#include <optional>

#include "mf/coeffs.hpp"
#include "mf/forward.hpp"
#include "mf/grid.hpp"

namespace mf {

struct RegressionConfig {
    int degree = 3;
    // columns with sample spread below this are treated as
    // deterministic and regressed on the constant basis only
    double min_spread = 1e-10;
};

// Least-squares fit of target on standardized powers of x. Degree is
// reduced automatically when the normal equations lose rank.
struct RegressionModel {
    double xmean = 0.0, xscale = 1.0;
    int degree = 0;
    std::array<double, 8> beta{};
    bool degree_reduced = false;

    double evaluate(double x) const {
        const double z = (x - xmean) / xscale;
        double acc = beta[degree];
        for (int j = degree - 1; j >= 0; --j) acc = acc * z + beta[j];
        return acc;
    }
};

RegressionModel fit_regression(std::span<const double> x, std::span<const double> target,
                               const RegressionConfig& cfg);

// Conditional-expectation estimator of Y(t_{k+1}) dW_k / dt given
// X(t_k), evaluated at every particle. `control_variate`, when present,
// is subtracted from ynext before forming the target; any
// F_k-measurable column leaves the estimated conditional expectation
// unchanged and the CE fit of ynext lowers its variance a lot.
std::vector<double> regress_z(std::span<const double> ynext, std::span<const double> dw, double dt,
                              std::span<const double> x, const RegressionConfig& cfg,
                              std::span<const double> control_variate = {});

struct BsdeOptions {
    double tol_picard = 1e-8;
    double tol_law = 1e-6;
    int max_picard = 50;
    int max_law = 25;
    RegressionConfig regression;
    double v0 = 0.0;             // Picard initialization for the Z argument
    double theta_override = -1.0;  // exponential weight; <0 derives it from the driver constants
    int max_root_iters = 100;
};

struct BsdeIterationRecord {
    double residual_weighted = 0.0;
    double residual_unweighted = 0.0;
    double y0 = 0.0;
};

struct BsdeColumnRecord {
    double t = 0.0;
    double mean_y = 0.0, var_y = 0.0, mean_z = 0.0;
};

struct BsdeSolution {
    PathMatrix Y;  // N x (M+1); column M equals the terminal condition
    PathMatrix Z;  // N x M
    TimeGrid grid;
    int picard_iterations = 0;
    double residual = 0.0;  // final weighted Picard residual
    double residual_unweighted = 0.0;
    std::vector<BsdeIterationRecord> history;
    std::vector<std::vector<BsdeColumnRecord>> iteration_columns;  // per Picard iteration
    int law_sweeps_total = 0;
    bool multiple_roots_flagged = false;

    double y0() const;
    std::vector<BsdeColumnRecord> column_records() const;
};

// One Picard stage: solves Y_t = xi + int f(s, Y_s, V_s, P_{(Y_s,V_s)}) ds - int Z dW
// for a frozen V. Backward sweep with the joint cloud frozen from the
// previous sweep and refreshed in an outer loop until the Y column
// means/variances move less than tol_law. The y-step is implicit
// (backward Euler), solved per particle by bracketing plus an
// Illinois-damped false-position iteration; monotonicity guarantees a
// root when dt*alpha2 < 1.
BsdeSolution inner_solve_fixed_v(const DriverSpec& driver, std::span<const double> terminal,
                                 const PathMatrix& V, const TimeGrid& grid, const NoiseBank& noise,
                                 const ParticleEnsemble& x_ensemble, const BsdeOptions& opts = {},
                                 const PathMatrix* law_warm_start = nullptr);

// Full monotone mean-field BSDE solve: Picard iteration over the Z
// argument, V^0 = v0, V^{n+1} = Z^n, stopping when both the
// exp(theta(t-T))-weighted and the unweighted squared-increment norms of
// Z fall below tol_picard. picard_iterations counts effective outer
// updates, so a driver that ignores (z, law of z) reports 1.
BsdeSolution solve_mf_bsde(const DriverSpec& driver, std::span<const double> terminal,
                           const TimeGrid& grid, const NoiseBank& noise,
                           const ParticleEnsemble& x_ensemble, const BsdeOptions& opts = {});

struct AdjointSolution {
    PathMatrix p;  // N x (M+1)
    PathMatrix q;  // N x M
    TimeGrid grid;
};

// Linear mean-field adjoint backward equation along (xstar, u): all six
// drift terms, with the starred convention that mu-kernels are evaluated
// at the independent copy's state with y set to this particle's state.
// Mean-field sums collapse to O(N) when the kernels are constant in y.
AdjointSolution solve_adjoint(const ControlProblemSpec& problem, const ParticleEnsemble& xstar,
                              const ControlGrid& u, const TimeGrid& grid, const NoiseBank& noise,
                              const RegressionConfig& reg = {});

}  // namespace mf
