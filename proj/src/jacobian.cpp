#include "hpa/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hpa/errors.hpp"
#include "hpa/parallel.hpp"

namespace hpa::jacobian {

DelayPencil linearize_at(const dde::NondimParams& p, double x0_lag2, double y0_lag1, double tau_base) {
    p.validate();
    if (!(x0_lag2 >= 0 && y0_lag1 >= 0)) throw InputError("linearize_at: lagged base values must be >= 0");
    DelayPencil pencil;
    pencil.a << -p.c1, 0.0, 0.0, -1.0;
    pencil.b(0, 1) = -p.h * p.c2 * dde::hill_derivative(y0_lag1, p.m1);
    pencil.c(1, 0) = p.c3 * dde::hill_derivative(x0_lag2, p.m2);
    pencil.t1 = p.t1;
    pencil.t2 = p.t2;
    pencil.tau_base = tau_base;
    return pencil;
}

ComplexMatrix pencil_eval(const DelayPencil& pencil, Complex lambda) {
    const Complex e1 = std::exp(-lambda * pencil.t1);
    const Complex e2 = std::exp(-lambda * pencil.t2);
    ComplexMatrix m(2, 2);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            m(i, j) = (i == j ? lambda : Complex(0.0)) - pencil.a(i, j) - pencil.b(i, j) * e1 -
                      pencil.c(i, j) * e2;
        }
    }
    return m;
}

Complex pencil_det(const DelayPencil& pencil, Complex lambda) {
    const ComplexMatrix m = pencil_eval(pencil, lambda);
    return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

Complex pencil_det_derivative(const DelayPencil& pencil, Complex lambda) {
    const ComplexMatrix m = pencil_eval(pencil, lambda);
    const Complex e1 = std::exp(-lambda * pencil.t1);
    const Complex e2 = std::exp(-lambda * pencil.t2);
    ComplexMatrix dm(2, 2);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            dm(i, j) = (i == j ? 1.0 : 0.0) + pencil.t1 * pencil.b(i, j) * e1 +
                       pencil.t2 * pencil.c(i, j) * e2;
        }
    }
    return dm(0, 0) * m(1, 1) + m(0, 0) * dm(1, 1) - dm(0, 1) * m(1, 0) - m(0, 1) * dm(1, 0);
}

Eigen::MatrixXd collocation_matrix(const DelayPencil& pencil, int degree) {
    const double span = pencil.max_delay();
    if (!(span > 0)) throw InputError("collocation_matrix: needs a positive delay");
    if (degree < 2) throw InputError("collocation_matrix: degree must be >= 2");
    const int n = degree;
    const int m = n + 1;

    // Chebyshev extreme points x_j = cos(j pi / n) mapped to theta in [-span, 0];
    // j = 0 is theta = 0.
    std::vector<double> x(m);
    std::vector<double> theta(m);
    for (int j = 0; j < m; ++j) {
        x[j] = std::cos(std::numbers::pi * j / n);
        theta[j] = 0.5 * span * (x[j] - 1.0);
    }

    Eigen::MatrixXd diff(m, m);
    auto weight = [&](int j) { return ((j == 0 || j == n) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0); };
    for (int i = 0; i < m; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            diff(i, j) = weight(i) / weight(j) / (x[i] - x[j]);
            row_sum += diff(i, j);
        }
        diff(i, i) = -row_sum;
    }
    diff *= 2.0 / span;

    // Barycentric interpolation weights at a point theta.
    auto lagrange = [&](double at) {
        Eigen::VectorXd l = Eigen::VectorXd::Zero(m);
        const double xa = 2.0 * at / span + 1.0;
        for (int j = 0; j < m; ++j) {
            if (std::abs(xa - x[j]) < 1e-14) {
                l(j) = 1.0;
                return l;
            }
        }
        double denom = 0.0;
        for (int j = 0; j < m; ++j) {
            const double w = ((j == 0 || j == n) ? 0.5 : 1.0) * ((j % 2) ? -1.0 : 1.0);
            l(j) = w / (xa - x[j]);
            denom += l(j);
        }
        return Eigen::VectorXd(l / denom);
    };

    const Eigen::VectorXd l1 = lagrange(-pencil.t1);
    const Eigen::VectorXd l2 = lagrange(-pencil.t2);

    // Unknowns ordered (u_1(theta_j), u_2(theta_j)) for j = 0..n.
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int r = 0; r < 2; ++r) {
        for (int s = 0; s < 2; ++s) {
            gen(r, s) += pencil.a(r, s);
            for (int k = 0; k < m; ++k) {
                gen(r, 2 * k + s) += pencil.b(r, s) * l1(k) + pencil.c(r, s) * l2(k);
            }
        }
    }
    for (int i = 1; i < m; ++i) {
        for (int k = 0; k < m; ++k) {
            gen(2 * i, 2 * k) = diff(i, k);
            gen(2 * i + 1, 2 * k + 1) = diff(i, k);
        }
    }
    return gen;
}

namespace {

bool newton_polish(const DelayPencil& pencil, Complex& lambda, double tolerance) {
    for (int it = 0; it < 50; ++it) {
        const Complex f = pencil_det(pencil, lambda);
        if (std::abs(f) <= tolerance) return true;
        const Complex df = pencil_det_derivative(pencil, lambda);
        if (std::abs(df) == 0.0) return false;
        const Complex step = f / df;
        lambda -= step;
        if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) return false;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(lambda)))
            return std::abs(pencil_det(pencil, lambda)) <= tolerance;
    }
    return std::abs(pencil_det(pencil, lambda)) <= tolerance;
}

}  // namespace

RootSet characteristic_roots(const DelayPencil& pencil, const RootOptions& options) {
    if (!std::isfinite(options.re_min)) throw InputError("characteristic_roots: re_min must be finite");
    std::vector<Complex> candidates;
    if (pencil.max_delay() > 0) {
        candidates = numerics::eigenvalues(collocation_matrix(pencil, options.chebyshev_degree).cast<Complex>());
    } else {
        const Eigen::Matrix2d sum = pencil.a + pencil.b + pencil.c;
        candidates = numerics::eigenvalues(sum.cast<Complex>());
    }

    RootSet out;
    for (Complex lambda : candidates) {
        if (lambda.real() < options.re_min - 0.5) continue;
        if (!newton_polish(pencil, lambda, options.newton_tolerance)) {
            ++out.dropped_candidates;
            continue;
        }
        if (lambda.real() < options.re_min) continue;
        // Real pencils: keep the upper representative and add its conjugate below.
        if (std::abs(lambda.imag()) < 1e-12 * std::max(1.0, std::abs(lambda))) lambda.imag(0.0);
        if (lambda.imag() < 0) lambda = std::conj(lambda);
        const bool seen = std::any_of(out.roots.begin(), out.roots.end(), [&](Complex r) {
            return std::abs(r - lambda) <= options.dedup_tolerance * std::max(1.0, std::abs(lambda));
        });
        if (!seen) out.roots.push_back(lambda);
    }
    const std::size_t upper = out.roots.size();
    for (std::size_t k = 0; k < upper; ++k)
        if (out.roots[k].imag() > 0) out.roots.push_back(std::conj(out.roots[k]));
    std::sort(out.roots.begin(), out.roots.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return out;
}

numerics::PseudospectrumGrid pencil_pseudospectrum(const DelayPencil& pencil, const numerics::GridAxes& axes) {
    return numerics::evaluate_grid(axes, [&](Complex z) { return numerics::svd_min(pencil_eval(pencil, z)).sigma_min; });
}

numerics::GridAxes default_pencil_axes() { return {{-6.0, 3.0, 301}, {-15.0, 15.0, 301}}; }

double spectral_abscissa(const DelayPencil& pencil) {
    const RootSet set = characteristic_roots(pencil);
    if (set.roots.empty()) throw ConvergenceError("spectral_abscissa: no characteristic roots with Re >= -5");
    return set.roots.front().real();
}

namespace {

double distance_given_alpha(const DelayPencil& pencil, double alpha) {
    if (alpha >= 0) throw InputError("distance_to_instability: requires spectral abscissa < 0");
    auto axis_sigma = [&](double s) { return numerics::svd_min(pencil_eval(pencil, {0.0, s})).sigma_min; };

    const double s_max = 2.0 * (pencil.a.norm() + pencil.b.norm() + pencil.c.norm()) + 10.0;
    constexpr int kPoints = 2000;
    const double ds = s_max / (kPoints - 1);
    int best = 0;
    double best_value = axis_sigma(0.0);
    for (int k = 1; k < kPoints; ++k) {
        const double v = axis_sigma(ds * k);
        if (v < best_value) {
            best_value = v;
            best = k;
        }
    }
    const double lo = std::max(0.0, ds * (best - 1));
    const double hi = std::min(s_max, ds * (best + 1));
    const double s_star = numerics::golden_section_min(axis_sigma, lo, hi, 1e-8);
    return std::min(best_value, axis_sigma(s_star));
}

}  // namespace

double distance_to_instability(const DelayPencil& pencil) {
    return distance_given_alpha(pencil, spectral_abscissa(pencil));
}

double nonnormality_index(const DelayPencil& pencil) {
    const double alpha = spectral_abscissa(pencil);
    return -alpha / distance_given_alpha(pencil, alpha);
}

StabilityIndicators indicators(const DelayPencil& pencil) {
    StabilityIndicators out;
    out.tau = pencil.tau_base;
    out.alpha = spectral_abscissa(pencil);
    if (out.alpha < 0) {
        out.d = distance_given_alpha(pencil, out.alpha);
        out.index = -out.alpha / *out.d;
    }
    return out;
}

DelayPencil pencil_on_cycle(const dde::LimitCycle& cycle, double tau) {
    const auto& p = cycle.params;
    const double x_lag = cycle.at(tau - p.t2).x;
    const double y_lag = cycle.at(tau - p.t1).y;
    return linearize_at(p, std::max(0.0, x_lag), std::max(0.0, y_lag), tau);
}

std::vector<StabilityIndicators> sweep_trajectory(const dde::LimitCycle& cycle, int n_samples) {
    if (n_samples < 16) throw InputError("sweep_trajectory: n_samples must be >= 16");
    std::vector<StabilityIndicators> out(static_cast<std::size_t>(n_samples));
    parallel_for(out.size(), [&](std::size_t k) {
        const double tau = cycle.period * static_cast<double>(k) / n_samples;
        out[k] = indicators(pencil_on_cycle(cycle, tau));
    });
    return out;
}

std::vector<HSweepRow> sweep_h(const std::vector<double>& h_values, const dde::NondimParams& p_template,
                               int n_samples, const dde::LimitCycleOptions& cycle_options) {
    std::vector<HSweepRow> rows;
    for (double h : h_values) {
        HSweepRow row;
        row.h = h;
        try {
            dde::NondimParams p = p_template;
            p.h = h;
            const auto cycle = dde::find_limit_cycle(p, cycle_options);
            const auto ind = sweep_trajectory(cycle, n_samples);
            row.max_alpha = -std::numeric_limits<double>::infinity();
            for (const auto& s : ind) {
                row.max_alpha = std::max(row.max_alpha, s.alpha);
                if (s.index) row.max_index = std::max(row.max_index.value_or(0.0), *s.index);
            }
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hpa::jacobian
