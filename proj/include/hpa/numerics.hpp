#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace hpa::numerics {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

/// Uniformly spaced sample positions for one axis of a complex-plane grid.
struct AxisSpec {
    double min = 0.0;
    double max = 1.0;
    int count = 2;

    std::vector<double> samples() const;
};

struct GridAxes {
    AxisSpec re;
    AxisSpec im;
};

/// Values of a nonnegative scalar field over a rectangular window of the complex
/// plane. `values(i, j)` belongs to z = re_axis[i] + i * im_axis[j].
///
/// Producers store either the reciprocal resolvent norm or a smallest singular
/// value; in both conventions points of the spectrum hold exactly 0.
struct PseudospectrumGrid {
    std::vector<double> re_axis;
    std::vector<double> im_axis;
    RealMatrix values;

    Complex point(int i, int j) const { return {re_axis[i], im_axis[j]}; }
    /// Bilinear interpolation; z outside the window is clamped to the boundary.
    double interpolate(Complex z) const;
    /// Area of the sublevel set {values <= level}, counted by cell midpoints of the
    /// bilinear interpolant.
    double sublevel_area(double level) const;
};

/// Evaluates `field` on every grid point (data-parallel over points). With
/// `conjugate_symmetric` and an imaginary axis symmetric about 0, only the upper
/// half is evaluated and mirrored.
PseudospectrumGrid evaluate_grid(const GridAxes& axes, const std::function<double(Complex)>& field,
                                 bool conjugate_symmetric = false);

struct KreissResult {
    double c = 0.0;
    double value = 0.0;
    Complex argmax_z{0.0, 0.0};
};

struct SvdMin {
    double sigma_min = 0.0;
    ComplexVector v_min;
};

struct EigenPair {
    Complex value;
    ComplexVector vector;
};

/// Smallest singular value and a matching unit right singular vector.
/// For wide matrices (rows < cols) the null direction gives sigma_min = 0.
SvdMin svd_min(const ComplexMatrix& m);

/// ||(T - zI)^{-1}||_inf, the largest absolute row sum of the inverse.
/// Returns +infinity when T - zI is singular to working precision.
double resolvent_inf_norm(const ComplexMatrix& t, Complex z);

/// All eigenpairs of a square matrix, eigenvectors normalised to unit 2-norm.
/// Throws ConvergenceError if the QR iteration fails or a residual check does not hold.
std::vector<EigenPair> eig_dense(const ComplexMatrix& m);

/// Eigenvalues only.
std::vector<Complex> eigenvalues(const ComplexMatrix& m);

struct KreissSearch {
    int radial = 200;
    int angular = 256;
    double r_max = 0.0;  ///< 0 selects c + 10
    /// Objective invariant under z -> conj(z); only the upper half plane is scanned.
    bool conjugate_symmetric = false;
    double tolerance = 1e-6;
};

/// Lower bound of sup_{|z| > c} (|z| - c) * resolvent_norm(z) over c < |z| <= r_max:
/// polar grid scan, then alternating golden-section refinement in radius and angle.
KreissResult kreiss_constant(const std::function<double(Complex)>& resolvent_norm, double c,
                             const KreissSearch& search = {});

/// sup_{0 <= k <= k_max} c^{-k} ||T^k||_inf. Upper bounds the Kreiss constant.
double power_bound(const ComplexMatrix& t, double c, int k_max);

/// Golden-section minimisation of a unimodal function on [a, b].
/// Returns the abscissa of the minimum.
double golden_section_min(const std::function<double(double)>& f, double a, double b,
                          double tolerance);

bool all_finite(const ComplexMatrix& m);

}  // namespace hpa::numerics
