#include "hpa/dde.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "hpa/errors.hpp"

namespace hpa::dde {

void DimensionalParams::validate() const {
    if (!(e_a > 0 && e_c > 0 && a > 0 && c > 0 && h > 0 && beta > 0))
        throw InputError("dimensional rates and constants must be strictly positive");
    if (!(tau1 >= 0 && tau2 >= 0)) throw InputError("delays must be nonnegative");
    if (m1 < 1 || m2 < 1) throw InputError("Hill exponents must be >= 1");
}

void NondimParams::validate() const {
    const bool finite = std::isfinite(c1) && std::isfinite(c2) && std::isfinite(c3) &&
                        std::isfinite(h) && std::isfinite(t1) && std::isfinite(t2);
    if (!finite) throw InputError("non-finite model parameter");
    if (!(c1 > 0 && c2 > 0 && c3 > 0)) throw InputError("c1, c2, c3 must be positive");
    if (h < 0) throw InputError("h must be nonnegative");
    if (t1 < 0 || t2 < 0) throw InputError("delays must be nonnegative");
    if (m1 < 1 || m2 < 1) throw InputError("Hill exponents must be >= 1");
}

double max_abs(State s) { return std::max(std::abs(s.x), std::abs(s.y)); }

NondimParams nondimensionalize(const DimensionalParams& p) {
    p.validate();
    NondimParams out;
    out.c1 = p.e_a / p.e_c;
    out.c2 = 1.0 / (p.a * p.e_c);
    out.c3 = p.beta / (p.c * p.e_c);
    out.h = p.h;
    out.m1 = p.m1;
    out.m2 = p.m2;
    out.t1 = p.e_c * p.tau1;
    out.t2 = p.e_c * p.tau2;
    return out;
}

double hill(double u, int m) {
    const double um = std::pow(u, m);
    if (!std::isfinite(um)) return 1.0;
    return um / (1.0 + um);
}

double hill_derivative(double u, int m) {
    const double um = std::pow(u, m);
    if (!std::isfinite(um)) return 0.0;
    const double denom = 1.0 + um;
    return m * std::pow(u, m - 1) / (denom * denom);
}

State rhs(State current, double x_lag2, double y_lag1, const NondimParams& p) {
    if (!std::isfinite(x_lag2) || !std::isfinite(y_lag1))
        throw InputError("rhs: lagged values must be finite");
    // 1 / (1 + y^m1) = 1 - hill(y, m1)
    const double feedback = 1.0 - hill(y_lag1, p.m1);
    return {-p.c1 * current.x + p.h * p.c2 * feedback, -current.y + p.c3 * hill(x_lag2, p.m2)};
}

namespace {

// Cubic Hermite interpolation on one step of length h, u in [0, 1].
double hermite(double y0, double y1, double d0, double d1, double h, double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0 + (-2 * u3 + 3 * u2) * y1 +
           (u3 - u2) * h * d1;
}

double hermite_slope(double y0, double y1, double d0, double d1, double h, double u) {
    const double u2 = u * u;
    return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * h * d0 + (-6 * u2 + 6 * u) * y1 +
            (3 * u2 - 2 * u) * h * d1) /
           h;
}

State hermite_state(const State& a, const State& b, const State& da, const State& db, double h, double u) {
    return {hermite(a.x, b.x, da.x, db.x, h, u), hermite(a.y, b.y, da.y, db.y, h, u)};
}

}  // namespace

Trajectory::Trajectory(double t0, double step, History history, std::vector<State> values,
                       std::vector<State> derivatives)
    : t0_(t0), step_(step), history_(std::move(history)), values_(std::move(values)),
      derivatives_(std::move(derivatives)) {
    if (values_.size() < 2 || values_.size() != derivatives_.size())
        throw InputError("Trajectory needs at least two nodes with derivatives");
    if (!(step_ > 0)) throw InputError("Trajectory step must be positive");
}

std::size_t Trajectory::segment(double t) const {
    const double pos = (t - t0_) / step_;
    auto k = static_cast<std::ptrdiff_t>(std::floor(pos));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(values_.size()) - 2);
    return static_cast<std::size_t>(k);
}

State Trajectory::operator()(double t) const {
    if (t < t0_) return history_(t);
    if (t > t_end() + 1e-9 * step_) {
        std::ostringstream msg;
        msg << "Trajectory evaluated at " << t << " beyond t_end = " << t_end();
        throw InputError(msg.str());
    }
    const std::size_t k = segment(t);
    const double u = (t - time(k)) / step_;
    return hermite_state(values_[k], values_[k + 1], derivatives_[k], derivatives_[k + 1], step_, u);
}

State Trajectory::derivative(double t) const {
    if (t < t0_) {
        const double eps = 1e-6 * std::max(step_, 1e-3);
        const State a = history_(t - eps);
        const State b = history_(std::min(t + eps, t0_));
        return (1.0 / (std::min(t + eps, t0_) - (t - eps))) * (b - a);
    }
    if (t > t_end() + 1e-9 * step_) throw InputError("Trajectory derivative beyond t_end");
    const std::size_t k = segment(t);
    const double u = (t - time(k)) / step_;
    const State &a = values_[k], &b = values_[k + 1];
    const State &da = derivatives_[k], &db = derivatives_[k + 1];
    return {hermite_slope(a.x, b.x, da.x, db.x, step_, u), hermite_slope(a.y, b.y, da.y, db.y, step_, u)};
}

Trajectory integrate_system(const LaggedRhs& f, double t1, double t2, const History& history,
                            double t0, double t_end, double step) {
    if (!(step > 0) || !std::isfinite(step)) throw InputError("integrate: step must be positive");
    if (!(t_end > t0)) throw InputError("integrate: t_end must exceed the start time");
    if (t1 < 0 || t2 < 0) throw InputError("integrate: delays must be nonnegative");
    for (double d : {t1, t2}) {
        if (d > 0 && step > d / 10.0 * (1 + 1e-12)) {
            std::ostringstream msg;
            msg << "integrate: step " << step << " too large for delay " << d << " (need <= delay/10)";
            throw InputError(msg.str());
        }
    }

    const auto n_steps =
        static_cast<std::size_t>(std::max(1.0, std::ceil((t_end - t0) / step - 1e-9)));
    std::vector<State> values;
    std::vector<State> slopes;
    values.reserve(n_steps + 1);
    slopes.reserve(n_steps + 1);

    auto past = [&](double s) -> State {
        if (s <= t0) return history(s);
        if (values.size() < 2) return values.back();
        const double pos = (s - t0) / step;
        auto k = static_cast<std::size_t>(std::floor(pos));
        if (k + 1 >= values.size()) k = values.size() - 2;
        const double u = pos - static_cast<double>(k);
        return hermite_state(values[k], values[k + 1], slopes[k], slopes[k + 1], step, u);
    };

    // Lagged inputs at stage time s with stage state `cur`. A zero delay reads the
    // stage state itself.
    auto eval = [&](double s, State cur) {
        const double xl = t2 > 0 ? past(s - t2).x : cur.x;
        const double yl = t1 > 0 ? past(s - t1).y : cur.y;
        return f(s, cur, xl, yl);
    };

    auto check = [&](State v, double s) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
            std::ostringstream msg;
            msg << "integrate: solution diverged at tau = " << s;
            throw NumericError(msg.str());
        }
    };

    State y = history(t0);
    check(y, t0);
    values.push_back(y);
    slopes.push_back(eval(t0, y));
    check(slopes.back(), t0);

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = t0 + step * static_cast<double>(k);
        const State k1 = slopes.back();
        const State k2 = eval(t + 0.5 * step, y + (0.5 * step) * k1);
        const State k3 = eval(t + 0.5 * step, y + (0.5 * step) * k2);
        const State k4 = eval(t + step, y + step * k3);
        y = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t_next = t0 + step * static_cast<double>(k + 1);
        check(y, t_next);
        values.push_back(y);
        // The slope at the new node only looks back by >= one delay, so it can be
        // evaluated before the node is used for interpolation.
        slopes.push_back(eval(t_next, y));
        check(slopes.back(), t_next);
    }
    return Trajectory(t0, step, history, std::move(values), std::move(slopes));
}

Trajectory integrate(const NondimParams& p, State constant_history, double t_end, double step) {
    return integrate(p, [constant_history](double) { return constant_history; }, 0.0, t_end, step);
}

Trajectory integrate(const NondimParams& p, const History& history, double t0, double t_end, double step) {
    p.validate();
    const NondimParams params = p;
    return integrate_system(
        [params](double, State cur, double xl, double yl) { return rhs(cur, xl, yl, params); }, p.t1,
        p.t2, history, t0, t_end, step);
}

double fixed_point_residual(const NondimParams& p, State s) {
    return max_abs(rhs(s, s.x, s.y, p));
}

State find_fixed_point(const NondimParams& p, State guess) {
    p.validate();
    if (!std::isfinite(guess.x) || !std::isfinite(guess.y)) throw InputError("fixed point guess not finite");
    State s = guess;
    for (int it = 0; it < 100; ++it) {
        const State r = rhs(s, s.x, s.y, p);
        if (max_abs(r) <= 1e-12) return s;
        const double j11 = -p.c1;
        const double j12 = -p.h * p.c2 * hill_derivative(s.y, p.m1);
        const double j21 = p.c3 * hill_derivative(s.x, p.m2);
        const double j22 = -1.0;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0 || !std::isfinite(det)) break;
        const State delta{(r.x * j22 - j12 * r.y) / det, (j11 * r.y - j21 * r.x) / det};
        // Damped step: halve until the residual decreases.
        double lambda = 1.0;
        State next = s - delta;
        for (int k = 0; k < 30; ++k) {
            next = s - lambda * delta;
            if (max_abs(rhs(next, next.x, next.y, p)) < max_abs(r)) break;
            lambda *= 0.5;
        }
        s = next;
    }
    const State r = rhs(s, s.x, s.y, p);
    if (max_abs(r) <= 1e-12) return s;
    std::ostringstream msg;
    msg << "find_fixed_point: Newton did not converge from (" << guess.x << ", " << guess.y
        << "); try a different initial guess";
    throw ConvergenceError(msg.str());
}

std::vector<double> acth_peaks(const Trajectory& traj, double from, double to) {
    std::vector<double> peaks;
    const std::size_t n = traj.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double ta = traj.time(k);
        if (ta < from || traj.time(k + 1) > to) continue;
        const double da = traj.node_derivative(k).x;
        const double db = traj.node_derivative(k + 1).x;
        if (!(da > 0 && db <= 0)) continue;
        // The Hermite slope is quadratic on the step; bisect it for the root.
        double lo = ta;
        double hi = traj.time(k + 1);
        if (db == 0) {
            peaks.push_back(hi);
            continue;
        }
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (traj.derivative(mid).x > 0)
                lo = mid;
            else
                hi = mid;
        }
        peaks.push_back(0.5 * (lo + hi));
    }
    return peaks;
}

namespace {

// Copy of the solution on [t - span, t], shifted so t maps to 0, used as a history.
History window_history(const Trajectory& traj, double t, double span) {
    const double step = traj.step();
    const auto last = static_cast<double>(traj.size() - 1);
    const auto k_end = static_cast<std::size_t>(std::min(last, std::ceil((t - traj.t0()) / step) + 1));
    const auto k_begin = static_cast<std::size_t>(
        std::max(0.0, std::floor((t - span - 2 * step - traj.t0()) / step)));
    std::vector<State> v(traj.nodes().begin() + k_begin, traj.nodes().begin() + k_end + 1);
    std::vector<State> d(traj.node_derivatives().begin() + k_begin,
                         traj.node_derivatives().begin() + k_end + 1);

    History before;
    if (k_begin == 0) {
        before = [inner = traj.history(), t](double s) { return inner(s + t); };
    } else {
        before = [first = v.front()](double) { return first; };
    }
    auto seg = std::make_shared<const Trajectory>(traj.time(k_begin) - t, step, std::move(before),
                                                  std::move(v), std::move(d));
    return [seg](double s) { return (*seg)(s); };
}

}  // namespace

State LimitCycle::at(double t) const {
    const double wrapped = t - period * std::floor(t / period);
    return orbit(std::min(wrapped, period));
}

State LimitCycle::derivative_at(double t) const {
    const double wrapped = t - period * std::floor(t / period);
    return orbit.derivative(std::min(wrapped, period));
}

LimitCycle find_limit_cycle(const NondimParams& p, const LimitCycleOptions& options) {
    p.validate();
    if (!(options.transient >= 0 && options.detect_window > 0))
        throw InputError("find_limit_cycle: transient must be >= 0 and detect_window > 0");

    const double t_stop = options.transient + options.detect_window;
    const Trajectory traj = integrate(p, options.initial, t_stop, options.step);

    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -x_min;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.time(k) < options.transient) continue;
        x_min = std::min(x_min, traj.node(k).x);
        x_max = std::max(x_max, traj.node(k).x);
    }
    if (!(x_max - x_min >= 1e-6)) throw ConvergenceError("find_limit_cycle: no limit cycle (no oscillation detected)");

    const std::vector<double> peaks = acth_peaks(traj, options.transient, t_stop);
    if (peaks.size() < 3)
        throw ConvergenceError("find_limit_cycle: no limit cycle (fewer than three ACTH maxima in window)");

    std::vector<double> periods;
    for (std::size_t k = 1; k < peaks.size(); ++k) periods.push_back(peaks[k] - peaks[k - 1]);
    for (std::size_t k = 1; k < periods.size(); ++k) {
        if (std::abs(periods[k] - periods[k - 1]) > 1e-3 * periods[k]) {
            std::ostringstream msg;
            msg << "find_limit_cycle: period estimates not converged (" << periods[k - 1] << " vs "
                << periods[k] << ")";
            throw ConvergenceError(msg.str());
        }
    }

    LimitCycle cycle;
    cycle.params = p;
    cycle.detected_periods = periods;
    double omega = periods.back();
    History history = window_history(traj, peaks[peaks.size() - 2], p.max_delay());

    for (int correction = 0;; ++correction) {
        const double n = std::max(1.0, std::round(omega / options.step));
        const double step = omega / n;
        // One and a half periods: enough to relocate the next maximum.
        const Trajectory ext = integrate(p, history, 0.0, 1.5 * omega, step);
        const State start = ext(0.0);
        const double defect = max_abs(ext(omega) - start);

        const auto next_peaks = acth_peaks(ext, 0.5 * omega, 1.5 * omega - step);
        const double refined = next_peaks.empty() ? omega : next_peaks.front();

        if (defect <= options.closure_tolerance || correction >= options.max_corrections) {
            cycle.period = omega;
            cycle.closure_defect = defect;
            cycle.orbit = integrate(p, history, 0.0, omega, step);
            if (defect > options.closure_tolerance) {
                std::ostringstream msg;
                msg << "find_limit_cycle: closure defect " << defect << " after "
                    << options.max_corrections << " corrections";
                throw ConvergenceError(msg.str());
            }
            break;
        }
        // Move the anchor to the next maximum on the section and adopt its return time.
        history = window_history(ext, refined, p.max_delay());
        omega = refined;
    }
    cycle.anchor_phase = 0.0;
    return cycle;
}

}  // namespace hpa::dde
