#pragma once

#include <array>
#include <functional>
#include <span>

#include "mf/coeffs.hpp"
#include "mf/measure.hpp"

namespace mf {

// Product bump rho(u,v) = c * k(u) * k(v) with k(u) = exp(-1/(u(1-u)))
// on (0,1), zero elsewhere. c is chosen so the stored Gauss-Legendre
// tensor rule integrates rho to exactly 1; the rule is validated against
// a finer one to 1e-8 at construction.
class BumpKernel {
public:
    BumpKernel() = default;  // empty; use make()
    static BumpKernel make(int quadrature_order);

    double density(double u, double v) const;
    double normalization() const { return norm_c_; }
    int order() const { return static_cast<int>(nodes_.size()); }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }
    // integral of rho under the stored rule (1 by construction)
    double integral() const;
    // first moment of the one-axis marginal, integral of u*k(u) / integral k
    double marginal_first_moment() const;

private:
    std::vector<double> nodes_, weights_;
    double norm_c_ = 0.0;
};

// Gauss-Legendre rule mapped to (0,1); exposed for cross-checks.
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Smoothing of a driver in its (y, mean) arguments. The base handle is
// the centered form g(s, y, m, cloud of (Y - E[Y], V)); the cloud is not
// shifted by the convolution.
struct MollifiedDriver {
    std::function<double(double s, double y, double m, const JointEmpiricalMeasure&)> base;
    int n = 1;
    BumpKernel kernel;
};

MollifiedDriver make_mollified(const DriverSpec& base, int n, const BumpKernel& kernel, double z_fixed);

// g^n(s, y, m, law) = sum_ab w_a w_b rho(u_a, u_b) g(s, y - u_a/n, m - u_b/n, law)
double evaluate_mollified(const MollifiedDriver& md, double s, double y, double mean,
                          const JointEmpiricalMeasure& centered);

// max over all pairs of |g^n(p) - g^n(q)| / (|dy| + |dm|). Needs at
// least 15 points (>= 100 pairs).
double lipschitz_probe(const MollifiedDriver& md, double s,
                       std::span<const std::array<double, 2>> points,
                       const JointEmpiricalMeasure& centered);

// Driver whose f is the n-smoothed version of `base` (which must carry
// f_tilde). Used for solver-level comparisons against the raw driver.
DriverSpec mollified_driver_spec(const DriverSpec& base, int n, const BumpKernel& kernel);

}  // namespace mf
