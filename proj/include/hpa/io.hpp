#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hpa/numerics.hpp"

namespace hpa::io {

/// Shortest round-trip decimal form; empty string for NaN (missing value).
std::string fmt(double v);

/// Plain CSV with a header row. Each row must match the header width.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Header row and data cells of a CSV file.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
Table read_csv(const std::filesystem::path& file);

/// `re,im,<value_name>` with the imaginary index varying fastest.
void write_grid(const std::filesystem::path& file, const numerics::PseudospectrumGrid& grid,
                const std::string& value_name);
/// Reads any three-column grid CSV written by write_grid.
numerics::PseudospectrumGrid read_grid(const std::filesystem::path& file);

/// First two columns as complex numbers (eigenvalue tables).
std::vector<std::complex<double>> read_points(const std::filesystem::path& file);

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string command;
    std::string timestamp;  ///< UTC, ISO 8601
    std::string tool_version;
};

std::string utc_timestamp();

/// Writes `<file>.json` next to the data file.
void write_sidecar(const std::filesystem::path& file, const Provenance& p);

}  // namespace hpa::io
