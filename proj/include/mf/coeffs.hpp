#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "mf/measure.hpp"

namespace mf {

// Constants asserted by the spec author for a monotone driver:
// |f(..z..) - f(..z'..)| <= alpha1 (|z-z'| + W2), one-sided slope alpha2
// in y, alpha3 in the mean argument, |f(s,0,0,delta_0)| <= alpha4,
// linear growth constant K.
struct MonotoneConstants {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha3 = 0.0;
    double alpha4 = 0.0;
    double growth_K = 1.0;
};

// BSDE driver f(t, y, z, P_{(Y,Z)}). The joint law is carried as a
// particle cloud. `f_tilde` is the centered form
//   f_tilde(t, y, z, m, cloud of (Y - E[Y], Z)) = f(t, y, z, cloud of (Y, Z))
// and is required by the mollifier; corpus drivers wire both.
struct DriverSpec {
    std::function<double(double t, double y, double z, const JointEmpiricalMeasure&)> f;
    std::function<double(double t, double y, double z, double m, const JointEmpiricalMeasure&)> f_tilde;
    bool lipschitz_in_y = false;
    std::optional<MonotoneConstants> monotone;
    std::string name;
};

struct SdeConstants {
    double growth_K = 1.0;
    double sigma_lipschitz = 1.0;
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
};

// Coefficients of an uncontrolled mean-field SDE dX = b dt + sigma dW.
struct SdeCoefficientSpec {
    std::function<double(double t, double x, const EmpiricalMeasure&)> b;
    std::function<double(double t, double x, const EmpiricalMeasure&)> sigma;
    std::optional<SdeConstants> constants;
    std::string name;
};

// Full control problem. The drift splits as
//   b(t, x, mu, u) = b0(t, x, centered(mu), u) + b1(t, E[mu], centered(mu));
// sigma, f, h take the full law. Lions derivatives are analytic kernels
// in an extra variable y and are lifted to particle averages by the
// solvers. Handles must be pure.
struct ControlProblemSpec {
    int control_dim = 1;
    std::vector<double> u_lo, u_hi;  // box per component
    double horizon = 1.0;
    double x0 = 0.0;

    std::function<double(double t, double x, const EmpiricalMeasure& mu0, std::span<const double> u)> b0;
    std::function<double(double t, double m, const EmpiricalMeasure& mu0)> b1;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u)> sigma;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u)> f;
    std::function<double(double x, const EmpiricalMeasure& mu)> h;

    // first-order derivatives
    std::function<double(double t, double x, const EmpiricalMeasure& mu0, std::span<const double> u)> b0_x;
    std::function<double(double t, double x, const EmpiricalMeasure& mu0, std::span<const double> u, int comp)> b0_u;
    std::function<double(double t, double m, const EmpiricalMeasure& mu0)> b1_m;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u)> sigma_x;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u, int comp)> sigma_u;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u)> f_x;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u, int comp)> f_u;
    std::function<double(double x, const EmpiricalMeasure& mu)> h_x;

    // Lions-derivative kernels (...; y)
    std::function<double(double t, double x, const EmpiricalMeasure& mu0, std::span<const double> u, double y)> b0_mu;
    std::function<double(double t, double m, const EmpiricalMeasure& mu0, double y)> b1_mu;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u, double y)> sigma_mu;
    std::function<double(double t, double x, const EmpiricalMeasure& mu, std::span<const double> u, double y)> f_mu;
    std::function<double(double x, const EmpiricalMeasure& mu, double y)> h_mu;

    // When every mu-kernel is constant in y the mean-field sums collapse
    // to O(N) precomputed expectations.
    bool mu_kernels_constant_in_y = false;

    std::string name;
};

// --- paper example corpus -------------------------------------------------

enum class AuxFunction { zero, clamped_linear };

struct DriverOptions {
    AuxFunction f1 = AuxFunction::zero;        // f1(z, E[h(Y,Z)]) term
    AuxFunction h_aux = AuxFunction::zero;     // h inside the expectation
};

// name in {sqrt_cap, oscillating_g, piecewise_l}
DriverSpec example_driver(std::string_view name, const DriverOptions& opts = {});

// Piecewise cosine construction with breakpoints t0 = 0,
// t_{2l+1} = t_{2l} + pi/(l+1), t_{2l} = t_{2l-1} + pi. Bounded by 1,
// C^1, derivative envelope -(y/pi + 1) <= g' <= 1.
double g_oscillating(double y);
double g_oscillating_prime(double y);
// k-th breakpoint t_k (k >= 0), for continuity checks.
double g_oscillating_breakpoint(int k);

// l(y) = 0 on (-inf,0], -sqrt(y) on (0,1], -e^{1-y} on (1,inf)
double l_piecewise(double y);

struct SdeOptions {
    AuxFunction b1 = AuxFunction::zero;
    AuxFunction sigma1 = AuxFunction::clamped_linear;
    AuxFunction h_aux = AuxFunction::zero;
    AuxFunction l_aux = AuxFunction::zero;
};

// name in {sqrt_cap_sde, oscillating_g_sde, piecewise_l_sde}
SdeCoefficientSpec example_sde(std::string_view name, const SdeOptions& opts = {});

struct LqParams {
    double a = 0.0, abar = 0.0, c = 1.0;
    double q = 0.0, qbar = 0.0, r = 1.0;
    double g = 1.0, gbar = 0.0;
    double sigma0 = 0.0;
    double horizon = 1.0;
    double x0 = 1.0;
    double u_lo = -2.0, u_hi = 2.0;
};

// Linear-quadratic benchmark:
//   b = a x + abar E[X] + c u,  sigma = sigma0,
//   f = (q x^2 + qbar (E[X])^2 + r u^2)/2,  h = (g x^2 + gbar (E[X])^2)/2.
ControlProblemSpec lq_problem(const LqParams& p);

struct OscControlParams {
    double c = 1.0;
    double sigma0 = 0.5;
    double q = 0.0, r = 1.0, g = 1.0;
    double horizon = 1.0;
    double x0 = 1.0;
    double u_lo = -2.0, u_hi = 2.0;
};

// Nonlinear corpus problem with b0 = g_oscillating(x) + c u and
// b1 = g_oscillating(m). Caveat: g' is unbounded below, so the
// linearized coefficient b0_x is unbounded on large domains; moment
// bounds still hold but variational estimates degrade far from the
// origin.
ControlProblemSpec osc_control_problem(const OscControlParams& p);

// --- numerical spot checks ------------------------------------------------

struct DerivativeCheckReport {
    double max_rel_error = 0.0;
    std::string worst_handle;
    bool pass = false;
};

// Central-difference consistency of every supplied derivative handle
// against its parent at random smooth probe points. Lions kernels are
// checked by shifting single atoms of the empirical law.
DerivativeCheckReport verify_derivatives(const ControlProblemSpec& p, int points, std::uint64_t seed,
                                         double rel_tol = 1e-4, double step = 1e-5);

// max over random pairs of (f(y)-f(y'))(y-y') / |y-y'|^2, z and law fixed.
double driver_monotonicity_probe(const DriverSpec& d, int pairs, std::uint64_t seed);

struct SdeProbeReport {
    // sup |b| / (K (1 + |x| + sqrt(E|X|^2)))
    double growth_ratio = 0.0;
    // sup |sigma(x1,mu1) - sigma(x2,mu2)| / (C1 (|dx| + W2))
    double sigma_lipschitz_ratio = 0.0;
    bool pass = false;
};

// Spot check of the asserted growth and diffusion-Lipschitz constants
// on random states and clouds. The spec must declare its constants.
SdeProbeReport sde_spot_check(const SdeCoefficientSpec& s, int probes, std::uint64_t seed);

struct ControlProbeReport {
    double sup_b0_x = -1e300;   // one-sided drift slopes
    double sup_b1_m = -1e300;
    double sup_abs_b0_u = 0.0;  // bounded-derivative group
    double sup_abs_b0_mu = 0.0;
    double sup_abs_b1_mu = 0.0;
    double sup_abs_sigma_x = 0.0;
    double sup_abs_sigma_u = 0.0;
    double sup_abs_sigma_mu = 0.0;
    double sup_abs_f_u = 0.0;
    // |f_x|, |h_x|, |f_mu|, |h_mu| against (1 + |x| + |m|)^4
    double polynomial_growth_ratio = 0.0;
    bool all_finite = false;
};

// Boundedness/slope spot checks of the control-problem derivative
// handles over random probe states.
ControlProbeReport control_problem_probe(const ControlProblemSpec& p, int probes, std::uint64_t seed);

}  // namespace mf
