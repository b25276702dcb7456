#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hpa/dde.hpp"
#include "hpa/koopman.hpp"
#include "hpa/numerics.hpp"

namespace hpa::config {

/// Everything a CLI run depends on. Text form: `[section]` headers followed by
/// `key = value` lines; `#` starts a comment. Unknown sections or keys are errors.
struct RunConfig {
    /// Exactly one of the two parameter sets is active.
    std::optional<dde::DimensionalParams> dimensional;
    std::optional<dde::NondimParams> nondimensional = dde::NondimParams{};
    std::optional<double> h_override;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    double step = 1e-3;
    double transient = 200.0;

    int jacobian_samples = 200;
    double jacobian_tau = 0.0;
    numerics::GridAxes jacobian_grid{{-6.0, 3.0, 301}, {-15.0, 15.0, 301}};

    int n_floquet = 50;
    double floquet_c = 1.0;
    numerics::GridAxes floquet_grid{{-1.5, 1.5, 201}, {-1.5, 1.5, 201}};

    koopman::EmbeddingConfig embedding;
    int dictionary_size = 400;
    double rank_tol = 1e-12;
    double koopman_c = 1.05;
    numerics::GridAxes koopman_grid{{-1.5, 1.5, 201}, {-1.5, 1.5, 201}};

    int kreiss_radial = 200;
    int kreiss_angular = 256;

    std::vector<double> h_values{4.0, 7.66, 12.0, 18.0, 23.0};

    void validate() const;
    /// Effective scaled parameters, with h_override applied.
    dde::NondimParams params() const;
    dde::LimitCycleOptions cycle_options() const;
    koopman::PipelineOptions pipeline_options() const;
    numerics::KreissSearch kreiss_search() const;
};

RunConfig parse(const std::string& text);
RunConfig load(const std::filesystem::path& file);
/// Canonical text form; parse(serialize(c)) reproduces c exactly.
std::string serialize(const RunConfig& cfg);
/// 16 hex digits identifying the canonical text.
std::string hash(const RunConfig& cfg);

}  // namespace hpa::config
