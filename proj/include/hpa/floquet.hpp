#pragma once

#include <string>
#include <vector>

#include "hpa/dde.hpp"
#include "hpa/numerics.hpp"

namespace hpa::floquet {

using numerics::Complex;

/// N equally spaced knots s_1 = -max(t1, t2) < ... < s_N = 0 carrying the
/// piecewise-affine hat functions phi_j(s_i) = delta_ij.
struct HatBasisGrid {
    std::vector<double> s_points;

    static HatBasisGrid uniform(double span, int n);
    int size() const { return static_cast<int>(s_points.size()); }
    double hat(int j, double s) const;
    /// Piecewise-affine interpolant of nodal values at s.
    double interpolate(const Eigen::VectorXd& nodal, double s) const;
};

/// Discretised period map of the linearisation about a limit cycle, acting on
/// nodal values (x block first, then y block).
struct MonodromyMatrix {
    Eigen::MatrixXd t;
    HatBasisGrid grid;
    double period = 0.0;
    double h = 0.0;
    double anchor = 0.0;
};

/// Solution of the periodic linear system over one period from a history given
/// as nodal vectors (piecewise-affine), sampled back on the knots at the end.
Eigen::VectorXd propagate(const dde::LimitCycle& cycle, const HatBasisGrid& grid, const Eigen::VectorXd& nodal);

/// Period map applied to an arbitrary history function, sampled on the knots.
Eigen::VectorXd propagate_history(const dde::LimitCycle& cycle, const HatBasisGrid& grid,
                                  const dde::History& history);

MonodromyMatrix assemble_monodromy(const dde::LimitCycle& cycle, int n);

/// Eigenvalues of T sorted by decreasing modulus.
std::vector<Complex> floquet_spectrum(const MonodromyMatrix& m);

/// 1 / ||(T - z)^{-1}||_inf on the grid (0 on the numerical spectrum).
numerics::PseudospectrumGrid floquet_pseudospectrum(const MonodromyMatrix& m, const numerics::GridAxes& axes);

numerics::GridAxes default_floquet_axes();

numerics::KreissResult floquet_kreiss(const MonodromyMatrix& m, double c, numerics::KreissSearch search = {});

struct SweepRow {
    double h = 0.0;
    bool ok = false;
    Complex dominant{0.0, 0.0};
    double kreiss = 0.0;
    std::string error;
};

std::vector<SweepRow> floquet_sweep_h(const std::vector<double>& h_values, const dde::NondimParams& p_template,
                                      int n, double c, const numerics::KreissSearch& search = {},
                                      const dde::LimitCycleOptions& cycle_options = {});

}  // namespace hpa::floquet
