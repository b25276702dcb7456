#include "hpa/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hpa/errors.hpp"
#include "hpa/jacobian.hpp"
#include "hpa/parallel.hpp"

namespace hpa::floquet {

HatBasisGrid HatBasisGrid::uniform(double span, int n) {
    if (n < 8) throw InputError("hat basis needs N >= 8");
    if (!(span > 0)) throw InputError("hat basis needs a positive history length");
    HatBasisGrid g;
    g.s_points.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.s_points[i] = -span + span * i / (n - 1);
    g.s_points.back() = 0.0;
    return g;
}

double HatBasisGrid::hat(int j, double s) const {
    const int n = size();
    const double sj = s_points[j];
    if (j > 0 && s >= s_points[j - 1] && s <= sj) return (s - s_points[j - 1]) / (sj - s_points[j - 1]);
    if (j + 1 < n && s >= sj && s <= s_points[j + 1]) return (s_points[j + 1] - s) / (s_points[j + 1] - sj);
    return s == sj ? 1.0 : 0.0;
}

double HatBasisGrid::interpolate(const Eigen::VectorXd& nodal, double s) const {
    const int n = size();
    if (s <= s_points.front()) return nodal(0);
    if (s >= s_points.back()) return nodal(n - 1);
    const double ds = s_points[1] - s_points[0];
    int k = static_cast<int>(std::floor((s - s_points.front()) / ds));
    k = std::clamp(k, 0, n - 2);
    const double u = (s - s_points[k]) / (s_points[k + 1] - s_points[k]);
    return (1 - u) * nodal(k) + u * nodal(k + 1);
}

namespace {

dde::Trajectory solve_periodic_linear(const dde::LimitCycle& cycle, const dde::History& history) {
    const auto& p = cycle.params;
    auto f = [&cycle, &p](double tau, dde::State cur, double x_lag2, double y_lag1) {
        const auto pencil = jacobian::linearize_at(p, std::max(0.0, cycle.at(tau - p.t2).x),
                                                   std::max(0.0, cycle.at(tau - p.t1).y), tau);
        return dde::State{pencil.a(0, 0) * cur.x + pencil.b(0, 1) * y_lag1,
                          pencil.a(1, 1) * cur.y + pencil.c(1, 0) * x_lag2};
    };
    return dde::integrate_system(f, p.t1, p.t2, history, 0.0, cycle.period, cycle.orbit.step());
}

Eigen::VectorXd sample_final(const dde::Trajectory& sol, const HatBasisGrid& grid, double period) {
    const int n = grid.size();
    Eigen::VectorXd out(2 * n);
    for (int i = 0; i < n; ++i) {
        const dde::State s = sol(std::min(period + grid.s_points[i], sol.t_end()));
        out(i) = s.x;
        out(n + i) = s.y;
    }
    return out;
}

}  // namespace

Eigen::VectorXd propagate_history(const dde::LimitCycle& cycle, const HatBasisGrid& grid,
                                  const dde::History& history) {
    return sample_final(solve_periodic_linear(cycle, history), grid, cycle.period);
}

Eigen::VectorXd propagate(const dde::LimitCycle& cycle, const HatBasisGrid& grid, const Eigen::VectorXd& nodal) {
    const int n = grid.size();
    if (nodal.size() != 2 * n) throw InputError("propagate: nodal vector must have length 2N");
    const Eigen::VectorXd xs = nodal.head(n);
    const Eigen::VectorXd ys = nodal.tail(n);
    return propagate_history(cycle, grid, [&](double s) {
        return dde::State{grid.interpolate(xs, s), grid.interpolate(ys, s)};
    });
}

MonodromyMatrix assemble_monodromy(const dde::LimitCycle& cycle, int n) {
    MonodromyMatrix m;
    m.grid = HatBasisGrid::uniform(cycle.params.max_delay(), n);
    m.period = cycle.period;
    m.h = cycle.params.h;
    m.anchor = cycle.anchor_phase;
    m.t.resize(2 * n, 2 * n);

    parallel_for(static_cast<std::size_t>(2 * n), [&](std::size_t col) {
        const int j = static_cast<int>(col) % n;
        const bool y_slot = static_cast<int>(col) >= n;
        const HatBasisGrid& g = m.grid;
        dde::History hist = [&g, j, y_slot](double s) {
            const double v = g.hat(j, s);
            return y_slot ? dde::State{0.0, v} : dde::State{v, 0.0};
        };
        try {
            m.t.col(static_cast<Eigen::Index>(col)) = propagate_history(cycle, g, hist);
        } catch (const NumericError& e) {
            std::ostringstream msg;
            msg << "assemble_monodromy: basis function " << col << " (" << (y_slot ? "y" : "x")
                << " slot, knot " << j << "): " << e.what();
            throw NumericError(msg.str());
        }
    });
    if (!m.t.allFinite()) throw NumericError("assemble_monodromy: non-finite entries");
    return m;
}

std::vector<Complex> floquet_spectrum(const MonodromyMatrix& m) {
    auto ev = numerics::eigenvalues(m.t.cast<Complex>());
    std::stable_sort(ev.begin(), ev.end(), [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });
    return ev;
}

numerics::PseudospectrumGrid floquet_pseudospectrum(const MonodromyMatrix& m, const numerics::GridAxes& axes) {
    const numerics::ComplexMatrix t = m.t.cast<Complex>();
    return numerics::evaluate_grid(axes, [&](Complex z) {
        const double norm = numerics::resolvent_inf_norm(t, z);
        return std::isfinite(norm) ? 1.0 / norm : 0.0;
    }, true);
}

numerics::GridAxes default_floquet_axes() { return {{-1.5, 1.5, 201}, {-1.5, 1.5, 201}}; }

numerics::KreissResult floquet_kreiss(const MonodromyMatrix& m, double c, numerics::KreissSearch search) {
    const auto spectrum = floquet_spectrum(m);
    const double radius = spectrum.empty() ? 0.0 : std::abs(spectrum.front());
    if (!(c > radius)) {
        std::ostringstream msg;
        msg << "floquet_kreiss: c = " << c << " must exceed the spectral radius " << radius;
        throw InputError(msg.str());
    }
    const numerics::ComplexMatrix t = m.t.cast<Complex>();
    search.conjugate_symmetric = true;
    return numerics::kreiss_constant([&](Complex z) { return numerics::resolvent_inf_norm(t, z); }, c, search);
}

std::vector<SweepRow> floquet_sweep_h(const std::vector<double>& h_values, const dde::NondimParams& p_template,
                                      int n, double c, const numerics::KreissSearch& search,
                                      const dde::LimitCycleOptions& cycle_options) {
    std::vector<SweepRow> rows;
    for (double h : h_values) {
        SweepRow row;
        row.h = h;
        try {
            dde::NondimParams p = p_template;
            p.h = h;
            const auto cycle = dde::find_limit_cycle(p, cycle_options);
            const auto m = assemble_monodromy(cycle, n);
            row.dominant = floquet_spectrum(m).front();
            row.kreiss = floquet_kreiss(m, c, search).value;
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hpa::floquet
