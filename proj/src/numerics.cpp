#include "hpa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hpa/errors.hpp"
#include "hpa/parallel.hpp"

namespace hpa::numerics {

std::vector<double> AxisSpec::samples() const {
    if (count < 2 || !(max > min)) throw InputError("axis needs count >= 2 and max > min");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double h = (max - min) / (count - 1);
    for (int i = 0; i < count; ++i) out[i] = min + h * i;
    out.back() = max;
    return out;
}

namespace {

// Index of the cell [axis[k], axis[k+1]] containing x, clamped to the axis.
std::pair<int, double> locate(const std::vector<double>& axis, double x) {
    const int n = static_cast<int>(axis.size());
    if (x <= axis.front()) return {0, 0.0};
    if (x >= axis.back()) return {n - 2, 1.0};
    const auto it = std::upper_bound(axis.begin(), axis.end(), x);
    const int k = static_cast<int>(it - axis.begin()) - 1;
    return {k, (x - axis[k]) / (axis[k + 1] - axis[k])};
}

}  // namespace

double PseudospectrumGrid::interpolate(Complex z) const {
    const auto [i, u] = locate(re_axis, z.real());
    const auto [j, v] = locate(im_axis, z.imag());
    return (1 - u) * (1 - v) * values(i, j) + u * (1 - v) * values(i + 1, j) +
           (1 - u) * v * values(i, j + 1) + u * v * values(i + 1, j + 1);
}

double PseudospectrumGrid::sublevel_area(double level) const {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < re_axis.size(); ++i) {
        for (std::size_t j = 0; j + 1 < im_axis.size(); ++j) {
            const double mid = 0.25 * (values(i, j) + values(i + 1, j) + values(i, j + 1) +
                                       values(i + 1, j + 1));
            if (mid <= level)
                area += (re_axis[i + 1] - re_axis[i]) * (im_axis[j + 1] - im_axis[j]);
        }
    }
    return area;
}

PseudospectrumGrid evaluate_grid(const GridAxes& axes, const std::function<double(Complex)>& field,
                                 bool conjugate_symmetric) {
    PseudospectrumGrid grid;
    grid.re_axis = axes.re.samples();
    grid.im_axis = axes.im.samples();
    const int nr = static_cast<int>(grid.re_axis.size());
    const int ni = static_cast<int>(grid.im_axis.size());
    grid.values.resize(nr, ni);

    bool mirror = conjugate_symmetric;
    for (int j = 0; mirror && j < ni; ++j)
        mirror = std::abs(grid.im_axis[j] + grid.im_axis[ni - 1 - j]) <= 1e-12 * (1.0 + std::abs(grid.im_axis[j]));
    // Columns j >= j_first cover Im z >= 0 when mirroring.
    const int j_first = mirror ? ni / 2 : 0;
    const int cols = ni - j_first;

    parallel_for(static_cast<std::size_t>(nr) * cols, [&](std::size_t k) {
        const int i = static_cast<int>(k / cols);
        const int j = j_first + static_cast<int>(k % cols);
        grid.values(i, j) = field(grid.point(i, j));
    });
    if (mirror) {
        for (int j = 0; j < j_first; ++j) grid.values.col(j) = grid.values.col(ni - 1 - j);
    }
    return grid;
}

bool all_finite(const ComplexMatrix& m) {
    return m.unaryExpr([](const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); })
        .all();
}

SvdMin svd_min(const ComplexMatrix& m) {
    if (m.rows() < 1 || m.cols() < 1) throw InputError("svd_min: empty matrix");
    if (!all_finite(m)) throw InputError("svd_min: non-finite entries");

    SvdMin out;
    if (m.rows() <= 16 && m.cols() <= 16) {
        Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        if (m.rows() < m.cols()) {
            out.sigma_min = 0.0;
        } else {
            out.sigma_min = s(s.size() - 1);
        }
        out.v_min = svd.matrixV().col(m.cols() - 1);
    } else {
        Eigen::BDCSVD<ComplexMatrix> svd(m, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        out.sigma_min = m.rows() < m.cols() ? 0.0 : s(s.size() - 1);
        out.v_min = svd.matrixV().col(m.cols() - 1);
    }
    return out;
}

double resolvent_inf_norm(const ComplexMatrix& t, Complex z) {
    if (t.rows() != t.cols()) throw InputError("resolvent_inf_norm: matrix must be square");
    const Eigen::Index n = t.rows();
    ComplexMatrix shifted = t;
    shifted.diagonal().array() -= z;

    Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
    const double scale = shifted.cwiseAbs().rowwise().sum().maxCoeff();
    const double pivot_floor = std::numeric_limits<double>::epsilon() * static_cast<double>(n) *
                               std::max(scale, std::numeric_limits<double>::min());
    const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (pivots.minCoeff() <= pivot_floor) return std::numeric_limits<double>::infinity();

    const double norm = lu.inverse().cwiseAbs().rowwise().sum().maxCoeff();
    if (!std::isfinite(norm)) return std::numeric_limits<double>::infinity();
    return norm;
}

std::vector<EigenPair> eig_dense(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw InputError("eig_dense: matrix must be square");
    if (!all_finite(m)) throw InputError("eig_dense: non-finite entries");

    Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, true);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "eig_dense: QR iteration did not converge (n = " << m.rows() << ")";
        throw ConvergenceError(msg.str());
    }

    const double norm = std::max(m.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    std::vector<EigenPair> out;
    out.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
        EigenPair pair{solver.eigenvalues()(k), solver.eigenvectors().col(k)};
        const double len = pair.vector.norm();
        if (len > 0) pair.vector /= len;
        const double resid = (m * pair.vector - pair.value * pair.vector).norm();
        if (!(resid <= 1e-8 * norm)) {
            std::ostringstream msg;
            msg << "eig_dense: residual " << resid << " exceeds 1e-8*||M|| for eigenvalue " << pair.value;
            throw ConvergenceError(msg.str());
        }
        out.push_back(std::move(pair));
    }
    return out;
}

std::vector<Complex> eigenvalues(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw InputError("eigenvalues: matrix must be square");
    if (!all_finite(m)) throw InputError("eigenvalues: non-finite entries");
    Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, false);
    if (solver.info() != Eigen::Success)
        throw ConvergenceError("eigenvalues: QR iteration did not converge");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

double golden_section_min(const std::function<double(double)>& f, double a, double b, double tolerance) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tolerance) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

KreissResult kreiss_constant(const std::function<double(Complex)>& resolvent_norm, double c,
                             const KreissSearch& search) {
    if (!(c > 0)) throw InputError("kreiss_constant: c must be positive");
    const double r_max = search.r_max > 0 ? search.r_max : c + 10.0;
    if (!(r_max > c)) throw InputError("kreiss_constant: r_max must exceed c");
    if (search.radial < 16 || search.angular < 16)
        throw InputError("kreiss_constant: grids need at least 16 points each");

    auto objective = [&](double r, double theta) {
        const Complex z = std::polar(r, theta);
        const double norm = resolvent_norm(z);
        if (!std::isfinite(norm) || norm < 0) {
            std::ostringstream msg;
            msg << "kreiss_constant: resolvent norm not finite at z = " << z
                << " (is c below the spectral radius?)";
            throw NumericError(msg.str());
        }
        return (r - c) * norm;
    };

    const int nr = search.radial;
    const int na = search.angular;
    const double dr = (r_max - c) / nr;
    const double theta_span = search.conjugate_symmetric ? std::numbers::pi : 2.0 * std::numbers::pi;
    const double dtheta = search.conjugate_symmetric ? theta_span / (na - 1) : theta_span / na;

    std::vector<double> values(static_cast<std::size_t>(nr) * na);
    parallel_for(values.size(), [&](std::size_t k) {
        const int ir = static_cast<int>(k / na);
        const int ia = static_cast<int>(k % na);
        values[k] = objective(c + dr * (ir + 1), dtheta * ia);
    });

    const auto best_it = std::max_element(values.begin(), values.end());
    const auto best_k = static_cast<std::size_t>(best_it - values.begin());
    double r = c + dr * (static_cast<int>(best_k / na) + 1);
    double theta = dtheta * static_cast<int>(best_k % na);
    double best = *best_it;

    // Alternate 1-D refinements; every accepted point is an actual evaluation.
    const double r_lo_limit = c + 1e-12;
    for (int sweep = 0; sweep < 20; ++sweep) {
        const double r_prev = r;
        const double theta_prev = theta;

        const double r_lo = std::max(r_lo_limit, r - dr);
        const double r_hi = std::min(r_max, r + dr);
        const double r_new = golden_section_min([&](double rr) { return -objective(rr, theta); }, r_lo,
                                                r_hi, search.tolerance);
        const double v_r = objective(r_new, theta);
        if (v_r > best) {
            best = v_r;
            r = r_new;
        }

        const double t_new = golden_section_min([&](double tt) { return -objective(r, tt); },
                                                theta - dtheta, theta + dtheta,
                                                search.tolerance / std::max(r, 1.0));
        const double v_t = objective(r, t_new);
        if (v_t > best) {
            best = v_t;
            theta = t_new;
        }

        if (std::abs(r - r_prev) < search.tolerance &&
            std::abs(theta - theta_prev) * r < search.tolerance)
            break;
    }

    return {c, best, std::polar(r, theta)};
}

double power_bound(const ComplexMatrix& t, double c, int k_max) {
    if (t.rows() != t.cols()) throw InputError("power_bound: matrix must be square");
    ComplexMatrix p = ComplexMatrix::Identity(t.rows(), t.cols());
    double best = 1.0;
    double scale = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        p = p * t;
        scale /= c;
        best = std::max(best, scale * p.cwiseAbs().rowwise().sum().maxCoeff());
    }
    return best;
}

}  // namespace hpa::numerics
