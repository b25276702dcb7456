#pragma once

#include <string>
#include <vector>

#include "hpa/numerics.hpp"

namespace hpa::contour {

using numerics::Complex;

struct Polyline {
    std::vector<Complex> points;
    bool closed = false;  ///< last point connects back to the first
};

/// Level curves of the bilinear interpolant of the grid. Vertices lie on cell
/// edges at linearly interpolated crossings; saddle cells are split by the cell
/// average.
std::vector<Polyline> marching_squares(const numerics::PseudospectrumGrid& grid, double level);

enum class Overlay { None, UnitCircle, ImaginaryAxis };

struct ContourRendering {
    numerics::PseudospectrumGrid grid;
    std::vector<double> levels;
    std::vector<Complex> overlay_points;
    Overlay overlay = Overlay::None;

    void validate() const;
};

/// Six levels log-spaced from 10^-1.5 to 10^-0.25.
std::vector<double> default_levels();

std::string render_svg(const ContourRendering& r);

}  // namespace hpa::contour
