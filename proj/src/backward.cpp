#include "mf/backward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace mf {

namespace {

// Solves the p x p normal equations by Cholesky; returns false when a
// pivot collapses (rank deficiency).
bool cholesky_solve(int p, const double* G, const double* r, double* beta) {
    double L[8][8] = {};
    double scale = 0.0;
    for (int i = 0; i < p; ++i) scale = std::max(scale, std::abs(G[i * p + i]));
    if (scale <= 0.0) return false;
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = G[i * p + j];
            for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
            if (i == j) {
                if (s <= 1e-12 * scale) return false;
                L[i][i] = std::sqrt(s);
            } else {
                L[i][j] = s / L[j][j];
            }
        }
    }
    double y[8];
    for (int i = 0; i < p; ++i) {
        double s = r[i];
        for (int k = 0; k < i; ++k) s -= L[i][k] * y[k];
        y[i] = s / L[i][i];
    }
    for (int i = p - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < p; ++k) s -= L[k][i] * beta[k];
        beta[i] = s / L[i][i];
    }
    return true;
}

}  // namespace

RegressionModel fit_regression(std::span<const double> x, std::span<const double> target,
                               const RegressionConfig& cfg) {
    if (x.size() != target.size() || x.empty())
        throw std::invalid_argument("fit_regression: shape mismatch or empty input");
    if (cfg.degree < 0 || cfg.degree > 7)
        throw std::invalid_argument("fit_regression: degree must be in [0,7]");
    const std::int64_t n = static_cast<std::int64_t>(x.size());

    double m2[2] = {0.0, 0.0};
    det_accumulate(n, m2, [&](std::int64_t i, std::span<double> a) {
        const double v = x[static_cast<std::size_t>(i)];
        a[0] += v;
        a[1] += v * v;
    });
    RegressionModel model;
    model.xmean = m2[0] / static_cast<double>(n);
    const double var = std::max(0.0, m2[1] / static_cast<double>(n) - model.xmean * model.xmean);
    const double spread = std::sqrt(var);

    int degree = cfg.degree;
    if (spread < cfg.min_spread * (1.0 + std::abs(model.xmean))) {
        degree = 0;  // deterministic column: plain average
        model.xscale = 1.0;
    } else {
        model.xscale = spread;
    }

    // power sums of the standardized variable plus moments against the target
    const int pmax = degree + 1;
    std::vector<double> acc(static_cast<std::size_t>(2 * degree + 1 + pmax), 0.0);
    det_accumulate(n, acc, [&](std::int64_t i, std::span<double> a) {
        const double z = (x[static_cast<std::size_t>(i)] - model.xmean) / model.xscale;
        const double y = target[static_cast<std::size_t>(i)];
        double zp = 1.0;
        for (int j = 0; j <= 2 * degree; ++j) {
            a[static_cast<std::size_t>(j)] += zp;
            if (j <= degree) a[static_cast<std::size_t>(2 * degree + 1 + j)] += zp * y;
            zp *= z;
        }
    });
    const double dn = static_cast<double>(n);

    for (int d = degree; d >= 0; --d) {
        const int p = d + 1;
        double G[64], r[8], beta[8];
        for (int a = 0; a < p; ++a) {
            r[a] = acc[static_cast<std::size_t>(2 * degree + 1 + a)] / dn;
            for (int b = 0; b < p; ++b) G[a * p + b] = acc[static_cast<std::size_t>(a + b)] / dn;
        }
        if (cholesky_solve(p, G, r, beta)) {
            model.degree = d;
            model.degree_reduced = (d < cfg.degree) && degree == cfg.degree;
            for (int j = 0; j <= d; ++j) model.beta[static_cast<std::size_t>(j)] = beta[j];
            return model;
        }
    }
    // degree 0 never fails unless n == 0, which was excluded
    throw SolverError("fit_regression: normal equations unsolvable");
}

std::vector<double> regress_z(std::span<const double> ynext, std::span<const double> dw, double dt,
                              std::span<const double> x, const RegressionConfig& cfg,
                              std::span<const double> control_variate) {
    const std::size_t n = x.size();
    if (ynext.size() != n || dw.size() != n)
        throw std::invalid_argument("regress_z: shape mismatch");
    if (static_cast<int>(n) < 10 * (cfg.degree + 1))
        throw std::invalid_argument("regress_z: need at least 10x basis size many particles");
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double centered = ynext[i] - (control_variate.empty() ? 0.0 : control_variate[i]);
        target[i] = centered * dw[i] / dt;
    }
    const RegressionModel model = fit_regression(x, target, cfg);
    std::vector<double> out(n);
    par_for(static_cast<std::int64_t>(n),
            [&](std::int64_t i) { out[static_cast<std::size_t>(i)] = model.evaluate(x[static_cast<std::size_t>(i)]); });
    return out;
}

double BsdeSolution::y0() const { return det_mean(Y.col(0)); }

std::vector<BsdeColumnRecord> BsdeSolution::column_records() const {
    std::vector<BsdeColumnRecord> rec(static_cast<std::size_t>(grid.steps) + 1);
    for (int k = 0; k <= grid.steps; ++k) {
        auto ycol = Y.col(k);
        double acc[2] = {0.0, 0.0};
        det_accumulate(static_cast<std::int64_t>(ycol.size()), acc, [&](std::int64_t i, std::span<double> a) {
            const double v = ycol[static_cast<std::size_t>(i)];
            a[0] += v;
            a[1] += v * v;
        });
        const double n = static_cast<double>(ycol.size());
        auto& r = rec[static_cast<std::size_t>(k)];
        r.t = grid.time(k);
        r.mean_y = acc[0] / n;
        r.var_y = acc[1] / n - r.mean_y * r.mean_y;
        r.mean_z = k < grid.steps ? det_mean(Z.col(k)) : 0.0;
    }
    return rec;
}

namespace {

struct ImplicitContext {
    double ce = 0.0;
    double dt = 0.0;
    int max_iters = 100;
};

// Root of phi(y) = y - ce - dt*F(y). F continuous, phi strictly
// increasing when dt*alpha2 < 1.
template <class F>
double solve_implicit(const F& f, const ImplicitContext& ctx, bool* multiple_roots) {
    auto phi = [&](double y) { return y - ctx.ce - ctx.dt * f(y); };
    double a = ctx.ce + ctx.dt * f(ctx.ce);  // explicit predictor
    double fa = phi(a);
    const double scale = 1.0 + std::abs(a) + std::abs(ctx.ce);
    if (std::abs(fa) <= 1e-14 * scale) return a;

    double b = a, fb = fa;
    double step = 0.25 * scale;
    int expand = 0;
    if (fa > 0.0) {
        while (fa > 0.0) {
            b = a;
            fb = fa;
            a -= step;
            step *= 2.0;
            fa = phi(a);
            if (++expand > 120 || !std::isfinite(fa))
                throw SolverError("implicit driver step: failed to bracket a root");
        }
    } else {
        while (fb <= 0.0) {
            a = b;
            fa = fb;
            b += step;
            step *= 2.0;
            fb = phi(b);
            if (++expand > 120 || !std::isfinite(fb))
                throw SolverError("implicit driver step: failed to bracket a root");
        }
    }
    // fa <= 0 < fb from here on
    if (multiple_roots) {
        int sign_changes = 0;
        double prev = fa;
        for (int j = 1; j <= 8; ++j) {
            const double y = a + (b - a) * j / 9.0;
            const double v = phi(y);
            if ((prev <= 0.0) != (v <= 0.0)) ++sign_changes;
            prev = v;
        }
        if ((prev <= 0.0) != (fb <= 0.0)) ++sign_changes;
        if (sign_changes > 1) *multiple_roots = true;
    }

    int side = 0;
    for (int it = 0; it < ctx.max_iters; ++it) {
        double c = (fb != fa) ? (a * fb - b * fa) / (fb - fa) : 0.5 * (a + b);
        if (!(c > a && c < b)) c = 0.5 * (a + b);
        const double fc = phi(c);
        const double tol = 1e-14 * (1.0 + std::abs(c));
        if (std::abs(fc) <= tol || b - a <= tol) return c;
        if (fc > 0.0) {
            b = c;
            fb = fc;
            if (side == +1) fa *= 0.5;
            side = +1;
        } else {
            a = c;
            fa = fc;
            if (side == -1) fb *= 0.5;
            side = -1;
        }
    }
    throw SolverError("implicit driver step: no convergence within iteration budget");
}

struct SweepResult {
    bool multiple_roots = false;
};

// One backward sweep with the per-step joint law frozen from lawY.
SweepResult backward_sweep(const DriverSpec& driver, std::span<const double> terminal, const PathMatrix& V,
                           const TimeGrid& grid, const NoiseBank& noise, const ParticleEnsemble& X,
                           const BsdeOptions& opts, const PathMatrix& lawY, PathMatrix& Y, PathMatrix& Z,
                           bool probe_roots) {
    const int n = V.particles();
    const int m = grid.steps;
    const double dt = grid.dt();
    std::copy(terminal.begin(), terminal.end(), Y.col(m).begin());

    std::vector<double> dwcol(static_cast<std::size_t>(n)), ce(static_cast<std::size_t>(n));
    SweepResult result;
    const bool use_tilde = static_cast<bool>(driver.f_tilde);

    for (int k = m - 1; k >= 0; --k) {
        const double t = grid.time(k);
        const auto xcol = X.column(k);
        const auto ynext = Y.col(k + 1);
        for (int i = 0; i < n; ++i) dwcol[static_cast<std::size_t>(i)] = noise.dw(i, k);

        const RegressionModel cem = fit_regression(xcol, ynext, opts.regression);
        par_for(n, [&](std::int64_t i) { ce[static_cast<std::size_t>(i)] = cem.evaluate(xcol[static_cast<std::size_t>(i)]); });
        auto zfit = regress_z(ynext, dwcol, dt, xcol, opts.regression, ce);
        std::copy(zfit.begin(), zfit.end(), Z.col(k).begin());

        const auto lawcol = lawY.col(k);
        const auto vcol = V.col(k);
        const JointEmpiricalMeasure cloud(std::vector<double>(lawcol.begin(), lawcol.end()),
                                          std::vector<double>(vcol.begin(), vcol.end()));
        std::optional<JointEmpiricalMeasure> centered;
        double mean1 = cloud.mean_first();
        if (use_tilde)
            centered.emplace(std::vector<double>(cloud.first_centered().begin(), cloud.first_centered().end()),
                             std::vector<double>(vcol.begin(), vcol.end()));

        auto ycol = Y.col(k);
        std::atomic<bool> flagged{false};
        par_for(n, [&](std::int64_t ii) {
            const int i = static_cast<int>(ii);
            const double vi = vcol[static_cast<std::size_t>(i)];
            auto feval = [&](double y) {
                return use_tilde ? driver.f_tilde(t, y, vi, mean1, *centered) : driver.f(t, y, vi, cloud);
            };
            ImplicitContext ctx{ce[static_cast<std::size_t>(i)], dt, opts.max_root_iters};
            bool multi = false;
            ycol[static_cast<std::size_t>(i)] =
                solve_implicit(feval, ctx, (probe_roots && i == 0) ? &multi : nullptr);
            if (multi) flagged.store(true, std::memory_order_relaxed);
        });
        if (flagged.load()) result.multiple_roots = true;
    }
    return result;
}

double column_change(const PathMatrix& A, const PathMatrix& B) {
    double worst = 0.0;
    for (int k = 0; k < A.columns(); ++k) {
        auto a = A.col(k), b = B.col(k);
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        det_accumulate(static_cast<std::int64_t>(a.size()), acc, [&](std::int64_t i, std::span<double> s) {
            const double x = a[static_cast<std::size_t>(i)], y = b[static_cast<std::size_t>(i)];
            s[0] += x;
            s[1] += x * x;
            s[2] += y;
            s[3] += y * y;
        });
        const double n = static_cast<double>(a.size());
        const double ma = acc[0] / n, mb = acc[2] / n;
        const double va = acc[1] / n - ma * ma, vb = acc[3] / n - mb * mb;
        worst = std::max(worst, std::abs(ma - mb) + std::abs(va - vb));
    }
    return worst;
}

}  // namespace

BsdeSolution inner_solve_fixed_v(const DriverSpec& driver, std::span<const double> terminal,
                                 const PathMatrix& V, const TimeGrid& grid, const NoiseBank& noise,
                                 const ParticleEnsemble& x_ensemble, const BsdeOptions& opts,
                                 const PathMatrix* law_warm_start) {
    if (!driver.f) throw std::invalid_argument("inner_solve_fixed_v: missing driver handle");
    if (!x_ensemble.stores_full())
        throw std::invalid_argument("inner_solve_fixed_v: regression ensemble must store full paths");
    const int n = x_ensemble.particles();
    const int m = grid.steps;
    if (static_cast<int>(terminal.size()) != n || V.particles() != n || V.columns() != m)
        throw std::invalid_argument("inner_solve_fixed_v: shape mismatch");
    for (double v : terminal)
        if (!std::isfinite(v)) throw std::invalid_argument("inner_solve_fixed_v: non-finite terminal value");
    if (driver.monotone && grid.dt() * driver.monotone->alpha2 >= 1.0)
        throw std::invalid_argument("inner_solve_fixed_v: dt*alpha2 must be < 1 for the implicit step");

    BsdeSolution sol;
    sol.grid = grid;
    sol.Y = PathMatrix(n, m + 1);
    sol.Z = PathMatrix(n, m);

    PathMatrix lawY(n, m + 1);
    if (law_warm_start) {
        if (law_warm_start->particles() != n || law_warm_start->columns() != m + 1)
            throw std::invalid_argument("inner_solve_fixed_v: warm start shape mismatch");
        lawY = *law_warm_start;
    } else {
        for (int k = 0; k <= m; ++k) std::copy(terminal.begin(), terminal.end(), lawY.col(k).begin());
    }

    for (int sweep = 0; sweep < opts.max_law; ++sweep) {
        const auto r = backward_sweep(driver, terminal, V, grid, noise, x_ensemble, opts, lawY, sol.Y,
                                      sol.Z, sweep == 0);
        sol.multiple_roots_flagged = sol.multiple_roots_flagged || r.multiple_roots;
        ++sol.law_sweeps_total;
        const double change = column_change(sol.Y, lawY);
        lawY = sol.Y;
        if (change < opts.tol_law) return sol;
    }
    throw SolverError("inner_solve_fixed_v: joint-law refresh did not settle within " +
                      std::to_string(opts.max_law) + " sweeps (tol_law " + std::to_string(opts.tol_law) + ")");
}

BsdeSolution solve_mf_bsde(const DriverSpec& driver, std::span<const double> terminal,
                           const TimeGrid& grid, const NoiseBank& noise,
                           const ParticleEnsemble& x_ensemble, const BsdeOptions& opts) {
    const int n = x_ensemble.particles();
    const int m = grid.steps;
    const double dt = grid.dt();

    double theta = opts.theta_override;
    if (theta < 0.0) {
        const MonotoneConstants mc = driver.monotone.value_or(MonotoneConstants{});
        theta = 2.0 * mc.alpha2 + 2.0 * mc.alpha3 + 8.0 * mc.alpha1 * mc.alpha1 + 1.0;
    }

    PathMatrix V(n, m);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < n; ++i) V.at(k, i) = opts.v0;

    BsdeSolution sol;
    PathMatrix prevZ = V;
    PathMatrix prevY;
    bool have_prev = false;
    std::vector<BsdeIterationRecord> history;
    std::vector<std::vector<BsdeColumnRecord>> iteration_columns;
    int total_sweeps = 0;
    bool multi_flag = false;

    for (int iter = 1; iter <= opts.max_picard; ++iter) {
        BsdeSolution stage = inner_solve_fixed_v(driver, terminal, V, grid, noise, x_ensemble, opts,
                                                 have_prev ? &prevY : nullptr);
        total_sweeps += stage.law_sweeps_total;
        multi_flag = multi_flag || stage.multiple_roots_flagged;

        // squared Z increment, weighted as in the contraction estimate
        double rw = 0.0, ru = 0.0;
        for (int k = 0; k < m; ++k) {
            auto z = stage.Z.col(k);
            auto pz = prevZ.col(k);
            double acc[1] = {0.0};
            det_accumulate(static_cast<std::int64_t>(z.size()), acc, [&](std::int64_t i, std::span<double> a) {
                const double d = z[static_cast<std::size_t>(i)] - pz[static_cast<std::size_t>(i)];
                a[0] += d * d;
            });
            const double e = acc[0] / static_cast<double>(n) * dt;
            ru += e;
            rw += std::exp(theta * (grid.time(k) - grid.horizon)) * e;
        }

        prevZ = stage.Z;
        prevY = stage.Y;
        have_prev = true;
        V = stage.Z;

        history.push_back({rw, ru, stage.y0()});
        iteration_columns.push_back(stage.column_records());

        sol = std::move(stage);
        sol.history = history;
        sol.iteration_columns = iteration_columns;
        sol.law_sweeps_total = total_sweeps;
        sol.multiple_roots_flagged = multi_flag;
        sol.residual = rw;
        sol.residual_unweighted = ru;
        sol.picard_iterations = std::max(1, iter - 1);

        if (iter >= 2 && rw < opts.tol_picard && ru < opts.tol_picard) return sol;
    }
    std::string msg = "solve_mf_bsde: no contraction after " + std::to_string(opts.max_picard) +
                      " Picard iterations; weighted residuals:";
    for (const auto& h : history) msg += " " + std::to_string(h.residual_weighted);
    throw SolverError(msg);
}

AdjointSolution solve_adjoint(const ControlProblemSpec& problem, const ParticleEnsemble& xstar,
                              const ControlGrid& u, const TimeGrid& grid, const NoiseBank& noise,
                              const RegressionConfig& reg) {
    if (!xstar.stores_full()) throw std::invalid_argument("solve_adjoint: need full state paths");
    if (u.steps != grid.steps) throw std::invalid_argument("solve_adjoint: control grid mismatch");
    const int n = xstar.particles();
    const int m = grid.steps;
    const double dt = grid.dt();

    AdjointSolution adj;
    adj.grid = grid;
    adj.p = PathMatrix(n, m + 1);
    adj.q = PathMatrix(n, m);

    std::vector<double> xcen(static_cast<std::size_t>(n));
    std::vector<double> dwcol(static_cast<std::size_t>(n)), pbar(static_cast<std::size_t>(n));

    // terminal condition p_T = h_x + E-hat[h_mu(copy; this)]
    {
        const auto xT = xstar.column(m);
        std::vector<double> buf(xT.begin(), xT.end());
        std::sort(buf.begin(), buf.end());
        const auto muT = EmpiricalMeasure::from_sorted(std::move(buf));
        auto pT = adj.p.col(m);
        if (problem.mu_kernels_constant_in_y) {
            double acc[1] = {0.0};
            det_accumulate(n, acc, [&](std::int64_t j, std::span<double> a) {
                a[0] += problem.h_mu(xT[static_cast<std::size_t>(j)], muT, 0.0);
            });
            const double hat = acc[0] / n;
            par_for(n, [&](std::int64_t i) {
                pT[static_cast<std::size_t>(i)] = problem.h_x(xT[static_cast<std::size_t>(i)], muT) + hat;
            });
        } else {
            par_for(n, [&](std::int64_t ii) {
                const int i = static_cast<int>(ii);
                double hat = 0.0;
                for (int j = 0; j < n; ++j)
                    hat += problem.h_mu(xT[static_cast<std::size_t>(j)], muT, xT[static_cast<std::size_t>(i)]);
                pT[static_cast<std::size_t>(i)] = problem.h_x(xT[static_cast<std::size_t>(i)], muT) + hat / n;
            });
        }
    }

    for (int k = m - 1; k >= 0; --k) {
        const double t = grid.time(k);
        const auto uk = u.at(k);
        const auto xcol = xstar.column(k);
        const auto pnext = adj.p.col(k + 1);

        std::vector<double> buf(xcol.begin(), xcol.end());
        std::sort(buf.begin(), buf.end());
        const auto mu = EmpiricalMeasure::from_sorted(std::move(buf));
        const double mean = mu.mean();
        std::vector<double> cen(mu.sorted().begin(), mu.sorted().end());
        for (auto& vv : cen) vv -= mean;
        const auto mu0 = EmpiricalMeasure::from_sorted(std::move(cen));
        for (int i = 0; i < n; ++i) {
            xcen[static_cast<std::size_t>(i)] = xcol[static_cast<std::size_t>(i)] - mean;
            dwcol[static_cast<std::size_t>(i)] = noise.dw(i, k);
        }

        const RegressionModel cem = fit_regression(xcol, pnext, reg);
        par_for(n, [&](std::int64_t i) {
            pbar[static_cast<std::size_t>(i)] = cem.evaluate(xcol[static_cast<std::size_t>(i)]);
        });
        const double mean_pbar = det_mean(pbar);

        auto qfit = regress_z(pnext, dwcol, dt, xcol, reg, pbar);
        std::copy(qfit.begin(), qfit.end(), adj.q.col(k).begin());
        auto qcol = adj.q.col(k);

        // mean-field sums
        double sig_hat_scalar = 0.0, f_hat_scalar = 0.0;
        std::vector<double> kbar;  // per-copy y-averaged drift kernel (generic path)
        if (problem.mu_kernels_constant_in_y) {
            double acc[2] = {0.0, 0.0};
            det_accumulate(n, acc, [&](std::int64_t j, std::span<double> a) {
                const double xj = xcol[static_cast<std::size_t>(j)];
                a[0] += problem.sigma_mu(t, xj, mu, uk, 0.0) * qcol[static_cast<std::size_t>(j)];
                a[1] += problem.f_mu(t, xj, mu, uk, 0.0);
            });
            sig_hat_scalar = acc[0] / n;
            f_hat_scalar = acc[1] / n;
            // the two b-hat terms coincide for y-independent kernels and cancel
        } else {
            kbar.assign(static_cast<std::size_t>(n), 0.0);
            par_for(n, [&](std::int64_t jj) {
                const int j = static_cast<int>(jj);
                const double xj = xcol[static_cast<std::size_t>(j)];
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += problem.b0_mu(t, xj, mu0, uk, xcen[static_cast<std::size_t>(l)]) +
                         problem.b1_mu(t, mean, mu0, xcen[static_cast<std::size_t>(l)]);
                kbar[static_cast<std::size_t>(j)] = s / n;
            });
        }
        double b_hat_mean = 0.0;  // E-hat[E[b_mu^star] p-hat]
        if (!problem.mu_kernels_constant_in_y) {
            double acc[1] = {0.0};
            det_accumulate(n, acc, [&](std::int64_t j, std::span<double> a) {
                a[0] += kbar[static_cast<std::size_t>(j)] * pbar[static_cast<std::size_t>(j)];
            });
            b_hat_mean = acc[0] / n;
        }

        auto pk = adj.p.col(k);
        par_for(n, [&](std::int64_t ii) {
            const int i = static_cast<int>(ii);
            const double x = xcol[static_cast<std::size_t>(i)];
            double b_hat = 0.0, sig_hat = sig_hat_scalar, f_hat = f_hat_scalar;
            if (!problem.mu_kernels_constant_in_y) {
                double hb = 0.0, hs = 0.0, hf = 0.0;
                const double yi = xcen[static_cast<std::size_t>(i)];
                for (int j = 0; j < n; ++j) {
                    const double xj = xcol[static_cast<std::size_t>(j)];
                    hb += (problem.b0_mu(t, xj, mu0, uk, yi) + problem.b1_mu(t, mean, mu0, yi)) *
                          pbar[static_cast<std::size_t>(j)];
                    hs += problem.sigma_mu(t, xj, mu, uk, x) * qcol[static_cast<std::size_t>(j)];
                    hf += problem.f_mu(t, xj, mu, uk, x);
                }
                b_hat = hb / n - b_hat_mean;
                sig_hat = hs / n;
                f_hat = hf / n;
            }
            const double drift = problem.b0_x(t, x, mu0, uk) * pbar[static_cast<std::size_t>(i)] +
                                 problem.b1_m(t, mean, mu0) * mean_pbar + b_hat +
                                 problem.sigma_x(t, x, mu, uk) * qcol[static_cast<std::size_t>(i)] + sig_hat +
                                 problem.f_x(t, x, mu, uk) + f_hat;
            pk[static_cast<std::size_t>(i)] = pbar[static_cast<std::size_t>(i)] + dt * drift;
        });
        for (double v : pk)
            if (!std::isfinite(v))
                throw SolverError("solve_adjoint: blow-up at step " + std::to_string(k));
    }
    return adj;
}

}  // namespace mf
