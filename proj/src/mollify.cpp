#include "mf/mollify.hpp"

#include <cmath>

namespace mf {

namespace {

double bump1(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return std::exp(-1.0 / (u * (1.0 - u)));
}

double quad_sum_bump(std::span<const double> nodes, std::span<const double> weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * bump1(nodes[i]);
    return s;
}

}  // namespace

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_01: order must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        const double w = 1.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

BumpKernel BumpKernel::make(int quadrature_order) {
    if (quadrature_order < 8)
        throw std::invalid_argument("BumpKernel::make: quadrature order must be >= 8");
    BumpKernel k;
    gauss_legendre_01(quadrature_order, k.nodes_, k.weights_);
    const double s = quad_sum_bump(k.nodes_, k.weights_);
    if (!(s > 0.0)) throw std::invalid_argument("BumpKernel::make: degenerate quadrature");
    k.norm_c_ = 1.0 / (s * s);

    // Validate against a finer rule: the normalized mass must already be
    // within 1e-8 of one, otherwise the order is too small.
    std::vector<double> fn, fw;
    gauss_legendre_01(std::max(2 * quadrature_order, 64), fn, fw);
    const double sf = quad_sum_bump(fn, fw);
    if (std::abs(k.norm_c_ * sf * sf - 1.0) > 1e-8)
        throw std::invalid_argument("BumpKernel::make: quadrature order too small to normalize within 1e-8");
    return k;
}

double BumpKernel::density(double u, double v) const { return norm_c_ * bump1(u) * bump1(v); }

double BumpKernel::integral() const {
    double acc = 0.0;
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
        const double ka = weights_[a] * bump1(nodes_[a]);
        double row = 0.0;
        for (std::size_t b = 0; b < nodes_.size(); ++b) row += weights_[b] * bump1(nodes_[b]);
        acc += ka * row;
    }
    return norm_c_ * acc;
}

double BumpKernel::marginal_first_moment() const {
    double s = 0.0, su = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double kv = weights_[i] * bump1(nodes_[i]);
        s += kv;
        su += nodes_[i] * kv;
    }
    return su / s;
}

MollifiedDriver make_mollified(const DriverSpec& base, int n, const BumpKernel& kernel, double z_fixed) {
    if (!base.f_tilde)
        throw std::invalid_argument("make_mollified: driver '" + base.name + "' has no centered form");
    if (n < 1) throw std::invalid_argument("make_mollified: smoothing index must be >= 1");
    MollifiedDriver md;
    auto ft = base.f_tilde;
    md.base = [ft, z_fixed](double s, double y, double m, const JointEmpiricalMeasure& cloud) {
        return ft(s, y, z_fixed, m, cloud);
    };
    md.n = n;
    md.kernel = kernel;
    return md;
}

double evaluate_mollified(const MollifiedDriver& md, double s, double y, double mean,
                          const JointEmpiricalMeasure& centered) {
    const auto nodes = md.kernel.nodes();
    const auto weights = md.kernel.weights();
    const double c = md.kernel.normalization();
    const double inv_n = 1.0 / md.n;
    double acc = 0.0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const double ka = weights[a] * bump1(nodes[a]);
        if (ka == 0.0) continue;
        const double ya = y - nodes[a] * inv_n;
        double row = 0.0;
        for (std::size_t b = 0; b < nodes.size(); ++b) {
            const double kb = weights[b] * bump1(nodes[b]);
            row += kb * md.base(s, ya, mean - nodes[b] * inv_n, centered);
        }
        acc += ka * row;
    }
    return c * acc;
}

double lipschitz_probe(const MollifiedDriver& md, double s,
                       std::span<const std::array<double, 2>> points,
                       const JointEmpiricalMeasure& centered) {
    const std::size_t n = points.size();
    if (n * (n - 1) / 2 < 100)
        throw std::invalid_argument("lipschitz_probe: need at least 100 probe pairs");
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i)
        vals[i] = evaluate_mollified(md, s, points[i][0], points[i][1], centered);
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double den = std::abs(points[i][0] - points[j][0]) + std::abs(points[i][1] - points[j][1]);
            if (den < 1e-12) continue;
            best = std::max(best, std::abs(vals[i] - vals[j]) / den);
        }
    }
    return best;
}

DriverSpec mollified_driver_spec(const DriverSpec& base, int n, const BumpKernel& kernel) {
    if (!base.f_tilde)
        throw std::invalid_argument("mollified_driver_spec: driver '" + base.name + "' has no centered form");
    if (n < 1) throw std::invalid_argument("mollified_driver_spec: smoothing index must be >= 1");

    DriverSpec d;
    d.name = base.name + "_mollified_n" + std::to_string(n);
    d.lipschitz_in_y = true;
    d.monotone = base.monotone;

    auto ft = base.f_tilde;
    std::vector<double> nodes(kernel.nodes().begin(), kernel.nodes().end());
    std::vector<double> kw(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) kw[i] = kernel.weights()[i] * bump1(nodes[i]);
    const double c = kernel.normalization();
    const double inv_n = 1.0 / n;

    auto tilde = [ft, nodes, kw, c, inv_n](double t, double y, double z, double m,
                                           const JointEmpiricalMeasure& cloud) {
        double acc = 0.0;
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            const double ya = y - nodes[a] * inv_n;
            double row = 0.0;
            for (std::size_t b = 0; b < nodes.size(); ++b)
                row += kw[b] * ft(t, ya, z, m - nodes[b] * inv_n, cloud);
            acc += kw[a] * row;
        }
        return c * acc;
    };
    d.f_tilde = tilde;
    d.f = [tilde](double t, double y, double z, const JointEmpiricalMeasure& cloud) {
        // re-express through the centered cloud carried by the joint law
        const double m = cloud.mean_first();
        JointEmpiricalMeasure centered(
            std::vector<double>(cloud.first_centered().begin(), cloud.first_centered().end()),
            std::vector<double>(cloud.second().begin(), cloud.second().end()));
        return tilde(t, y, z, m, centered);
    };
    return d;
}

}  // namespace mf
