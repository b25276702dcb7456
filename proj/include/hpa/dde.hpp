#pragma once

#include <functional>
#include <vector>

namespace hpa::dde {

/// ACTH-cortisol model in physical units (rates per minute, delays in minutes).
struct DimensionalParams {
    double e_a = 0.04;   ///< ACTH elimination rate
    double e_c = 0.01;   ///< cortisol elimination rate
    int m1 = 4;          ///< Hill exponent of cortisol feedback on ACTH
    int m2 = 4;          ///< Hill exponent of ACTH drive on cortisol
    double a = 21.0;     ///< ACTH half-maximum constant
    double c = 6.11;     ///< cortisol half-maximum constant
    double h = 7.66;     ///< CRH stimulation of ACTH secretion
    double beta = 1.0;   ///< cortisol production rate
    double tau1 = 15.0;  ///< cortisol -> ACTH feedback delay
    double tau2 = 15.0;  ///< ACTH -> cortisol delay

    void validate() const;
};

/// Scaled model: x = A/a, y = C/c, time in units of 1/e_c.
struct NondimParams {
    double c1 = 4.0;
    double c2 = 1.0 / 0.21;
    double c3 = 1.0 / 0.0611;
    double h = 7.66;
    int m1 = 4;
    int m2 = 4;
    double t1 = 0.15;  ///< lag of y in the x equation
    double t2 = 0.15;  ///< lag of x in the y equation

    void validate() const;
    double max_delay() const { return t1 > t2 ? t1 : t2; }
};

struct State {
    double x = 0.0;
    double y = 0.0;
};

inline State operator+(State a, State b) { return {a.x + b.x, a.y + b.y}; }
inline State operator-(State a, State b) { return {a.x - b.x, a.y - b.y}; }
inline State operator*(double s, State a) { return {s * a.x, s * a.y}; }
double max_abs(State s);

/// Fixed point quoted for the default parameters; also the default initial condition.
inline constexpr State kDefaultInitial{0.8858, 1.7461};

NondimParams nondimensionalize(const DimensionalParams& p);

/// u^m / (1 + u^m), saturating to 1 instead of overflowing.
double hill(double u, int m);
/// d/du of hill(u, m).
double hill_derivative(double u, int m);

/// Right-hand side of the scaled model. `x_lag2` is x(tau - t2), `y_lag1` is y(tau - t1).
State rhs(State current, double x_lag2, double y_lag1, const NondimParams& p);

/// History function, queried for times before the integration start.
using History = std::function<State(double)>;

/// Uniformly sampled solution with stored derivatives. Values between nodes come
/// from cubic Hermite interpolation; times before t0 are answered by the history.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(double t0, double step, History history, std::vector<State> values,
               std::vector<State> derivatives);

    double t0() const { return t0_; }
    double t_end() const { return t0_ + step_ * static_cast<double>(values_.size() - 1); }
    double step() const { return step_; }
    std::size_t size() const { return values_.size(); }

    double time(std::size_t k) const { return t0_ + step_ * static_cast<double>(k); }
    const State& node(std::size_t k) const { return values_[k]; }
    const State& node_derivative(std::size_t k) const { return derivatives_[k]; }
    const std::vector<State>& nodes() const { return values_; }
    const std::vector<State>& node_derivatives() const { return derivatives_; }
    const History& history() const { return history_; }

    /// Interpolated state; throws InputError beyond t_end().
    State operator()(double t) const;
    /// Derivative of the Hermite interpolant (history times are differenced numerically).
    State derivative(double t) const;

private:
    std::size_t segment(double t) const;

    double t0_ = 0.0;
    double step_ = 0.0;
    History history_;
    std::vector<State> values_;
    std::vector<State> derivatives_;
};

/// f(tau, current state, x(tau - t2), y(tau - t1)) for a two-delay system with the
/// same lag pattern as the model.
using LaggedRhs = std::function<State(double, State, double, double)>;

/// Classical RK4 by the method of steps on the uniform grid t0, t0 + step, ...,
/// covering at least t_end. Lagged stage values are read from the dense solution.
Trajectory integrate_system(const LaggedRhs& f, double t1, double t2, const History& history,
                            double t0, double t_end, double step);

/// Integrates the model from a constant history on [-max_delay, 0].
Trajectory integrate(const NondimParams& p, State constant_history, double t_end, double step = 1e-3);

/// Integrates the model from an arbitrary history function.
Trajectory integrate(const NondimParams& p, const History& history, double t0, double t_end,
                     double step = 1e-3);

/// Newton iteration on the equilibrium equations; residual inf-norm <= 1e-12.
State find_fixed_point(const NondimParams& p, State guess);

/// Infinity norm of the equilibrium residual at `s`.
double fixed_point_residual(const NondimParams& p, State s);

/// One period of the attracting oscillation, time origin at an ACTH maximum.
struct LimitCycle {
    NondimParams params;
    double period = 0.0;
    Trajectory orbit;         ///< covers [0, period]; history is the preceding solution
    double anchor_phase = 0.0;
    double closure_defect = 0.0;
    std::vector<double> detected_periods;

    /// Periodic evaluation, any real t.
    State at(double t) const;
    State derivative_at(double t) const;
};

struct LimitCycleOptions {
    double transient = 200.0;
    double detect_window = 20.0;
    double step = 1e-3;
    State initial = kDefaultInitial;
    double closure_tolerance = 1e-6;
    int max_corrections = 20;
};

/// Integrates past the transient, estimates the period from successive ACTH
/// maxima and re-integrates exactly one period starting at a maximum.
LimitCycle find_limit_cycle(const NondimParams& p, const LimitCycleOptions& options = {});

/// Times in [from, to] at which x attains a local maximum (dx changes sign + to -).
std::vector<double> acth_peaks(const Trajectory& traj, double from, double to);

}  // namespace hpa::dde
