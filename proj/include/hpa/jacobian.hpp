#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hpa/dde.hpp"
#include "hpa/numerics.hpp"

namespace hpa::jacobian {

using numerics::Complex;
using numerics::ComplexMatrix;
using Matrix2 = Eigen::Matrix2d;

/// Linear two-delay system  u' = A u + B u(tau - t1) + C u(tau - t2)  frozen at a
/// base time, with characteristic matrix
///   Delta(lambda) = lambda I - A - B exp(-lambda t1) - C exp(-lambda t2).
///
/// Pencils built by linearize_at have A = diag(-c1, -1) and single off-diagonal
/// entries in B (row 1, col 2) and C (row 2, col 1); other pencils may carry
/// general 2x2 matrices.
struct DelayPencil {
    Matrix2 a = Matrix2::Zero();
    Matrix2 b = Matrix2::Zero();
    Matrix2 c = Matrix2::Zero();
    double t1 = 0.0;
    double t2 = 0.0;
    double tau_base = 0.0;

    double max_delay() const { return t1 > t2 ? t1 : t2; }
};

struct StabilityIndicators {
    double tau = 0.0;
    double alpha = 0.0;
    std::optional<double> d;      ///< absent when alpha >= 0
    std::optional<double> index;  ///< -alpha / d, absent when alpha >= 0
};

/// Pencil of the linearisation about base values y0(tau - t1), x0(tau - t2).
DelayPencil linearize_at(const dde::NondimParams& p, double x0_lag2, double y0_lag1, double tau_base = 0.0);

ComplexMatrix pencil_eval(const DelayPencil& pencil, Complex lambda);
Complex pencil_det(const DelayPencil& pencil, Complex lambda);
Complex pencil_det_derivative(const DelayPencil& pencil, Complex lambda);

struct RootOptions {
    double re_min = -5.0;
    int chebyshev_degree = 40;
    double newton_tolerance = 1e-10;
    double dedup_tolerance = 1e-8;
};

struct RootSet {
    std::vector<Complex> roots;  ///< sorted by decreasing real part
    int dropped_candidates = 0;  ///< Newton failures
};

/// Characteristic roots with Re >= re_min: eigenvalues of a Chebyshev collocation
/// of the infinitesimal generator, polished by Newton on det Delta.
RootSet characteristic_roots(const DelayPencil& pencil, const RootOptions& options = {});

/// Collocation matrix of the generator on [-max_delay, 0] (2 (degree + 1) square).
Eigen::MatrixXd collocation_matrix(const DelayPencil& pencil, int degree);

/// sigma_min(Delta(z)) over the grid.
numerics::PseudospectrumGrid pencil_pseudospectrum(const DelayPencil& pencil,
                                                   const numerics::GridAxes& axes);

numerics::GridAxes default_pencil_axes();

double spectral_abscissa(const DelayPencil& pencil);

/// min over real s of sigma_min(Delta(i s)); requires spectral_abscissa < 0.
double distance_to_instability(const DelayPencil& pencil);

/// -alpha / d; requires spectral_abscissa < 0.
double nonnormality_index(const DelayPencil& pencil);

/// All indicators at once (avoids recomputing the roots).
StabilityIndicators indicators(const DelayPencil& pencil);

/// Pencil at time tau along a periodic base solution.
DelayPencil pencil_on_cycle(const dde::LimitCycle& cycle, double tau);

/// Indicators at n_samples uniformly spaced times tau = k * period / n_samples.
std::vector<StabilityIndicators> sweep_trajectory(const dde::LimitCycle& cycle, int n_samples);

struct HSweepRow {
    double h = 0.0;
    bool ok = false;
    double max_alpha = 0.0;
    std::optional<double> max_index;
    std::string error;
};

std::vector<HSweepRow> sweep_h(const std::vector<double>& h_values, const dde::NondimParams& p_template,
                               int n_samples = 200, const dde::LimitCycleOptions& cycle_options = {});

}  // namespace hpa::jacobian
