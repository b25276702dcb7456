#include "hpa/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hpa/errors.hpp"

namespace hpa::io {

std::string fmt(double v) {
    if (std::isnan(v)) return {};
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw InputError("cannot write " + file.string());
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw InputError("write_csv: row width does not match the header");
        line(r);
    }
}

Table read_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot read " + file.string());
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) throw InputError("malformed row in " + file.string());
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw InputError("empty CSV " + file.string());
    return t;
}

namespace {

double cell_value(const std::string& s, const std::filesystem::path& file) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InputError("non-numeric cell '" + s + "' in " + file.string());
    return v;
}

}  // namespace

void write_grid(const std::filesystem::path& file, const numerics::PseudospectrumGrid& grid,
                const std::string& value_name) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(grid.re_axis.size() * grid.im_axis.size());
    for (std::size_t i = 0; i < grid.re_axis.size(); ++i)
        for (std::size_t j = 0; j < grid.im_axis.size(); ++j)
            rows.push_back({fmt(grid.re_axis[i]), fmt(grid.im_axis[j]),
                            fmt(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))});
    write_csv(file, {"re", "im", value_name}, rows);
}

numerics::PseudospectrumGrid read_grid(const std::filesystem::path& file) {
    const Table t = read_csv(file);
    if (t.header.size() != 3 || t.header[0] != "re" || t.header[1] != "im")
        throw InputError(file.string() + ": expected a re,im,<value> grid");
    std::map<double, std::size_t> re_index, im_index;
    std::vector<std::array<double, 3>> cells;
    for (const auto& r : t.rows) {
        cells.push_back({cell_value(r[0], file), cell_value(r[1], file), cell_value(r[2], file)});
        re_index.emplace(cells.back()[0], 0);
        im_index.emplace(cells.back()[1], 0);
    }
    numerics::PseudospectrumGrid g;
    for (auto& [x, k] : re_index) {
        k = g.re_axis.size();
        g.re_axis.push_back(x);
    }
    for (auto& [y, k] : im_index) {
        k = g.im_axis.size();
        g.im_axis.push_back(y);
    }
    if (g.re_axis.size() < 2 || g.im_axis.size() < 2 || cells.size() != g.re_axis.size() * g.im_axis.size())
        throw InputError(file.string() + ": not a complete rectangular grid");
    g.values = numerics::RealMatrix::Constant(static_cast<Eigen::Index>(g.re_axis.size()),
                                              static_cast<Eigen::Index>(g.im_axis.size()), std::nan(""));
    for (const auto& c : cells)
        g.values(static_cast<Eigen::Index>(re_index[c[0]]), static_cast<Eigen::Index>(im_index[c[1]])) = c[2];
    if (g.values.hasNaN()) throw InputError(file.string() + ": grid has missing points");
    return g;
}

std::vector<std::complex<double>> read_points(const std::filesystem::path& file) {
    const Table t = read_csv(file);
    if (t.header.size() < 2) throw InputError(file.string() + ": expected at least re,im columns");
    std::vector<std::complex<double>> out;
    for (const auto& r : t.rows) out.emplace_back(cell_value(r[0], file), cell_value(r[1], file));
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_sidecar(const std::filesystem::path& file, const Provenance& p) {
    const nlohmann::json j = {
        {"config_hash", p.config_hash}, {"seed", p.seed},
        {"command", p.command},         {"timestamp", p.timestamp},
        {"tool_version", p.tool_version},
    };
    std::ofstream out(file.string() + ".json");
    if (!out) throw InputError("cannot write sidecar for " + file.string());
    out << j.dump(2) << '\n';
}

}  // namespace hpa::io
