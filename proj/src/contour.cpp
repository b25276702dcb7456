#include "hpa/contour.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "hpa/errors.hpp"

namespace hpa::contour {

namespace {

// Grid edges: horizontal edge (i, j) joins (i, j)-(i+1, j); vertical edge (i, j)
// joins (i, j)-(i, j+1).
struct EdgeKey {
    long long id;
    bool operator==(const EdgeKey&) const = default;
};
struct EdgeHash {
    std::size_t operator()(const EdgeKey& k) const { return std::hash<long long>()(k.id); }
};

}  // namespace

std::vector<Polyline> marching_squares(const numerics::PseudospectrumGrid& grid, double level) {
    if (!(level > 0)) throw InputError("marching_squares: level must be positive");
    const int nr = static_cast<int>(grid.re_axis.size());
    const int ni = static_cast<int>(grid.im_axis.size());
    const auto& v = grid.values;

    auto h_key = [&](int i, int j) { return EdgeKey{2LL * (static_cast<long long>(i) * ni + j)}; };
    auto v_key = [&](int i, int j) { return EdgeKey{2LL * (static_cast<long long>(i) * ni + j) + 1}; };
    std::unordered_map<EdgeKey, Complex, EdgeHash> vertex;
    auto crossing = [&](EdgeKey key, int i0, int j0, int i1, int j1) {
        const double a = v(i0, j0);
        const double b = v(i1, j1);
        const double t = (level - a) / (b - a);
        const Complex za = grid.point(i0, j0);
        const Complex zb = grid.point(i1, j1);
        vertex.emplace(key, za + t * (zb - za));
        return key;
    };

    std::vector<std::array<EdgeKey, 2>> segments;
    for (int i = 0; i + 1 < nr; ++i) {
        for (int j = 0; j + 1 < ni; ++j) {
            const bool b00 = v(i, j) < level;
            const bool b10 = v(i + 1, j) < level;
            const bool b11 = v(i + 1, j + 1) < level;
            const bool b01 = v(i, j + 1) < level;
            std::vector<EdgeKey> hits;
            EdgeKey bottom{-1}, right{-1}, top{-1}, left{-1};
            if (b00 != b10) hits.push_back(bottom = crossing(h_key(i, j), i, j, i + 1, j));
            if (b10 != b11) hits.push_back(right = crossing(v_key(i + 1, j), i + 1, j, i + 1, j + 1));
            if (b01 != b11) hits.push_back(top = crossing(h_key(i, j + 1), i, j + 1, i + 1, j + 1));
            if (b00 != b01) hits.push_back(left = crossing(v_key(i, j), i, j, i, j + 1));
            if (hits.size() == 2) {
                segments.push_back({hits[0], hits[1]});
            } else if (hits.size() == 4) {
                const double mid = 0.25 * (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1));
                if ((mid < level) == b00) {
                    // Corners 00 and 11 connect through the centre.
                    segments.push_back({bottom, right});
                    segments.push_back({top, left});
                } else {
                    segments.push_back({bottom, left});
                    segments.push_back({top, right});
                }
            }
        }
    }

    // Join segments sharing an edge vertex; every vertex has degree 1 or 2.
    std::unordered_map<EdgeKey, std::vector<std::size_t>, EdgeHash> incident;
    for (std::size_t s = 0; s < segments.size(); ++s)
        for (const auto& k : segments[s]) incident[k].push_back(s);
    std::vector<char> used(segments.size(), 0);

    auto walk = [&](std::size_t s, EdgeKey from, std::vector<EdgeKey>& chain) {
        while (true) {
            used[s] = 1;
            const EdgeKey next = segments[s][0] == from ? segments[s][1] : segments[s][0];
            chain.push_back(next);
            std::size_t t = s;
            for (std::size_t cand : incident[next])
                if (!used[cand]) t = cand;
            if (t == s) return;
            s = t;
            from = next;
        }
    };

    std::vector<Polyline> out;
    auto emit = [&](const std::vector<EdgeKey>& chain, bool closed) {
        Polyline line;
        line.closed = closed;
        for (std::size_t k = 0; k < chain.size(); ++k) {
            if (closed && k + 1 == chain.size()) break;  // repeated start vertex
            line.points.push_back(vertex.at(chain[k]));
        }
        out.push_back(std::move(line));
    };

    // Open lines start at boundary vertices (degree 1).
    for (const auto& [key, segs] : incident) {
        if (segs.size() != 1 || used[segs[0]]) continue;
        std::vector<EdgeKey> chain{key};
        walk(segs[0], key, chain);
        emit(chain, false);
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        std::vector<EdgeKey> chain{segments[s][0]};
        walk(s, segments[s][0], chain);
        emit(chain, chain.front() == chain.back());
    }
    return out;
}

void ContourRendering::validate() const {
    if (levels.empty()) throw InputError("render: no contour levels");
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] > 0)) throw InputError("render: levels must be positive");
        if (k && !(levels[k] > levels[k - 1])) throw InputError("render: levels must be strictly increasing");
    }
    if (grid.re_axis.size() < 2 || grid.im_axis.size() < 2) throw InputError("render: grid too small");
}

std::vector<double> default_levels() {
    std::vector<double> out;
    for (int k = 0; k < 6; ++k) out.push_back(std::pow(10.0, -1.5 + 0.25 * k));
    return out;
}

std::string render_svg(const ContourRendering& r) {
    r.validate();
    const double x0 = r.grid.re_axis.front(), x1 = r.grid.re_axis.back();
    const double y0 = r.grid.im_axis.front(), y1 = r.grid.im_axis.back();
    const double width = 600.0;
    const double height = width * (y1 - y0) / (x1 - x0);
    const double margin = 40.0;
    auto px = [&](Complex z) {
        return std::pair{margin + (z.real() - x0) / (x1 - x0) * width,
                         margin + (y1 - z.imag()) / (y1 - y0) * height};
    };

    std::ostringstream svg;
    svg.setf(std::ios::fixed);
    svg.precision(2);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width + 2 * margin << "\" height=\""
        << height + 2 * margin << "\">\n";
    svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\" stroke=\"black\"/>\n";

    // Dark for small epsilon, light for large.
    static const char* palette[] = {"#3b0f70", "#8c2981", "#de4968", "#fe9f6d", "#fcdf6f", "#b5de2b"};
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
        const char* colour = palette[k % 6];
        svg << "<g class=\"level\" data-epsilon=\"" << r.levels[k] << "\" stroke=\"" << colour
            << "\" fill=\"none\">\n";
        for (const auto& line : marching_squares(r.grid, r.levels[k])) {
            if (line.points.size() < 2) continue;
            svg << "<path d=\"";
            for (std::size_t p = 0; p < line.points.size(); ++p) {
                const auto [x, y] = px(line.points[p]);
                svg << (p ? " L" : "M") << x << ' ' << y;
            }
            if (line.closed) svg << " Z";
            svg << "\"/>\n";
        }
        svg << "</g>\n";
    }

    if (r.overlay == Overlay::UnitCircle) {
        const auto [cx, cy] = px({0.0, 0.0});
        svg << "<ellipse cx=\"" << cx << "\" cy=\"" << cy << "\" rx=\"" << width / (x1 - x0) << "\" ry=\""
            << height / (y1 - y0) << "\" fill=\"none\" stroke=\"magenta\" stroke-dasharray=\"4 4\"/>\n";
    } else if (r.overlay == Overlay::ImaginaryAxis && x0 <= 0.0 && x1 >= 0.0) {
        const auto [xa, ya] = px({0.0, y1});
        const auto [xb, yb] = px({0.0, y0});
        svg << "<line x1=\"" << xa << "\" y1=\"" << ya << "\" x2=\"" << xb << "\" y2=\"" << yb
            << "\" stroke=\"magenta\" stroke-dasharray=\"4 4\"/>\n";
    }
    for (const Complex z : r.overlay_points) {
        if (z.real() < x0 || z.real() > x1 || z.imag() < y0 || z.imag() > y1) continue;
        const auto [x, y] = px(z);
        svg << "<circle class=\"eig\" cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"red\"/>\n";
    }

    char label[160];
    std::snprintf(label, sizeof label, "Re [%g, %g], Im [%g, %g]", x0, x1, y0, y1);
    svg << "<text x=\"" << margin << "\" y=\"" << margin - 10 << "\" font-size=\"12\">" << label << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace hpa::contour
