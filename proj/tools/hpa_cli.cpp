// Command-line front end for the HPA-axis pseudospectra analyses.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpa/config.hpp"
#include "hpa/contour.hpp"
#include "hpa/dde.hpp"
#include "hpa/errors.hpp"
#include "hpa/floquet.hpp"
#include "hpa/io.hpp"
#include "hpa/jacobian.hpp"
#include "hpa/koopman.hpp"
#include "hpa/parallel.hpp"

#ifndef HPA_VERSION
#define HPA_VERSION "0.0.0"
#endif

namespace {

using namespace hpa;
using io::fmt;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitConvergence = 4;

struct Session {
    config::RunConfig cfg;
    std::string command;
    std::string config_hash;

    fs::path path(const std::string& name) const { return cfg.output_dir / name; }

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) const {
        const fs::path file = path(name);
        io::write_csv(file, header, rows);
        sidecar(file);
        std::cout << "wrote " << file.string() << '\n';
    }

    void grid(const std::string& name, const numerics::PseudospectrumGrid& g, const std::string& value) const {
        const fs::path file = path(name);
        io::write_grid(file, g, value);
        sidecar(file);
        std::cout << "wrote " << file.string() << '\n';
    }

    void sidecar(const fs::path& file) const {
        io::write_sidecar(file, {config_hash, cfg.seed, command, io::utc_timestamp(), HPA_VERSION});
    }
};

std::vector<std::string> cells(std::initializer_list<double> values) {
    std::vector<std::string> out;
    for (double v : values) out.push_back(fmt(v));
    return out;
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::vector<std::string>> trajectory_rows(const dde::Trajectory& traj, int stride, double shift = 0.0) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < traj.size(); k += static_cast<std::size_t>(stride)) {
        const auto& s = traj.node(k);
        const auto& d = traj.node_derivative(k);
        rows.push_back(cells({traj.time(k) + shift, s.x, s.y, d.x, d.y}));
    }
    return rows;
}

void cmd_simulate(const Session& s, double t_end, double x0, double y0, int stride) {
    const auto traj = dde::integrate(s.cfg.params(), dde::State{x0, y0}, t_end, s.cfg.step);
    s.csv("simulate.csv", {"tau", "x", "y", "dx", "dy"}, trajectory_rows(traj, stride));
}

void cmd_fixed_point(const Session& s) {
    const auto p = s.cfg.params();
    const dde::State fp = dde::find_fixed_point(p, dde::kDefaultInitial);
    const double res = dde::fixed_point_residual(p, fp);
    const dde::State quoted_rhs = dde::rhs(dde::kDefaultInitial, dde::kDefaultInitial.x, dde::kDefaultInitial.y, p);
    std::cout.precision(10);
    std::cout << "fixed point: x = " << fp.x << ", y = " << fp.y << "\n"
              << "residual: " << res << "\n"
              << "rhs at (0.8858, 1.7461): dx = " << quoted_rhs.x << ", dy = " << quoted_rhs.y << "\n";
    s.csv("fixed_point.csv", {"x", "y", "residual"}, {cells({fp.x, fp.y, res})});
}

void cmd_limit_cycle(const Session& s, int stride) {
    const auto cycle = dde::find_limit_cycle(s.cfg.params(), s.cfg.cycle_options());
    std::cout.precision(10);
    std::cout << "period: " << cycle.period << "\nclosure defect: " << cycle.closure_defect << '\n';
    s.csv("limit_cycle.csv", {"tau", "x", "y", "dx", "dy"}, trajectory_rows(cycle.orbit, stride));
}

void cmd_jacobian_sweep(const Session& s) {
    const auto cycle = dde::find_limit_cycle(s.cfg.params(), s.cfg.cycle_options());
    const auto sweep = jacobian::sweep_trajectory(cycle, s.cfg.jacobian_samples);
    std::vector<std::vector<std::string>> all, traj, alpha, dist, index;
    for (const auto& row : sweep) {
        const auto st = cycle.at(row.tau);
        const auto dv = cycle.derivative_at(row.tau);
        all.push_back({fmt(row.tau), fmt(row.alpha), opt(row.d), opt(row.index)});
        traj.push_back(cells({row.tau, st.x, st.y, dv.x, dv.y}));
        alpha.push_back(cells({row.tau, row.alpha}));
        dist.push_back({fmt(row.tau), opt(row.d)});
        index.push_back({fmt(row.tau), opt(row.index)});
    }
    s.csv("jacobian_sweep.csv", {"tau", "alpha", "d", "index"}, all);
    s.csv("jacobian_trajectory.csv", {"tau", "x", "y", "dx", "dy"}, traj);
    s.csv("jacobian_alpha.csv", {"tau", "alpha"}, alpha);
    s.csv("jacobian_distance.csv", {"tau", "d"}, dist);
    s.csv("jacobian_index.csv", {"tau", "index"}, index);
}

void cmd_jacobian_grid(const Session& s) {
    const auto cycle = dde::find_limit_cycle(s.cfg.params(), s.cfg.cycle_options());
    const auto pencil = jacobian::pencil_on_cycle(cycle, s.cfg.jacobian_tau);
    const auto roots = jacobian::characteristic_roots(pencil);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : roots.roots)
        rows.push_back(cells({r.real(), r.imag(), std::abs(jacobian::pencil_det(pencil, r))}));
    s.csv("jacobian_roots.csv", {"re", "im", "residual"}, rows);
    s.grid("jacobian_grid.csv", jacobian::pencil_pseudospectrum(pencil, s.cfg.jacobian_grid), "sigma_min");
}

void cmd_floquet(const Session& s, bool kreiss, bool dump) {
    const auto cycle = dde::find_limit_cycle(s.cfg.params(), s.cfg.cycle_options());
    const auto m = floquet::assemble_monodromy(cycle, s.cfg.n_floquet);
    const auto spectrum = floquet::floquet_spectrum(m);
    std::vector<std::vector<std::string>> rows;
    for (const auto& z : spectrum) rows.push_back(cells({z.real(), z.imag(), std::abs(z)}));
    s.csv("floquet_eigs.csv", {"re", "im", "modulus"}, rows);
    std::cout.precision(10);
    std::cout << "dominant multiplier: " << spectrum.front() << '\n';
    if (dump) {
        std::vector<std::vector<std::string>> mat;
        std::vector<std::string> header;
        for (Eigen::Index j = 0; j < m.t.cols(); ++j) header.push_back("c" + std::to_string(j));
        for (Eigen::Index i = 0; i < m.t.rows(); ++i) {
            mat.emplace_back();
            for (Eigen::Index j = 0; j < m.t.cols(); ++j) mat.back().push_back(fmt(m.t(i, j)));
        }
        s.csv("monodromy.csv", header, mat);
    }
    s.grid("floquet_grid.csv", floquet::floquet_pseudospectrum(m, s.cfg.floquet_grid), "value");
    if (kreiss) {
        const auto k = floquet::floquet_kreiss(m, s.cfg.floquet_c, s.cfg.kreiss_search());
        std::cout << "Kreiss constant (c = " << k.c << "): " << k.value << " at z = " << k.argmax_z << '\n';
        s.csv("floquet_kreiss.csv", {"c", "kreiss", "re", "im"},
              {cells({k.c, k.value, k.argmax_z.real(), k.argmax_z.imag()})});
    }
}

void cmd_koopman(const Session& s, bool kreiss, const std::string& dataset_dir, int harmonics) {
    const auto p = s.cfg.params();
    auto opts = s.cfg.pipeline_options();
    koopman::Pipeline pipe;
    if (!dataset_dir.empty() && fs::exists(fs::path(dataset_dir) / "dataset.json")) {
        pipe.cycle = dde::find_limit_cycle(p, opts.cycle);
        pipe.data = koopman::load_dataset(dataset_dir);
        pipe.embedding = pipe.data.config;
        pipe.dictionary = koopman::build_dictionary(pipe.data, opts.dictionary_size, s.cfg.seed, opts.kmeans);
        pipe.matrices = koopman::assemble_matrices(koopman::eval_dictionary(pipe.dictionary, pipe.data.x0),
                                                   koopman::eval_dictionary(pipe.dictionary, pipe.data.x1));
        std::cout << "loaded dataset from " << dataset_dir << '\n';
    } else {
        pipe = koopman::run_pipeline(p, opts);
        if (!dataset_dir.empty()) koopman::save_dataset(pipe.data, dataset_dir);
    }
    if (pipe.data.skipped > 0) std::cerr << "skipped " << pipe.data.skipped << " diverging initial points\n";

    const koopman::ReducedModel model(pipe.matrices, s.cfg.rank_tol);
    const auto eigs = koopman::dmd_eigs(pipe.matrices, s.cfg.rank_tol);
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : eigs)
        rows.push_back(cells({e.value.real(), e.value.imag(), koopman::residual(e.value, e.g, pipe.matrices)}));
    s.csv("koopman_eigs.csv", {"re", "im", "residual"}, rows);
    std::cout << "retained rank: " << model.rank() << " of " << pipe.dictionary.size() << '\n';
    s.grid("koopman_grid.csv", koopman::koopman_pseudospectrum(model, s.cfg.koopman_grid), "value");

    if (harmonics > 0) {
        // lambda_0: circle eigenvalue with the smallest positive phase.
        const koopman::DmdEigenpair* base = nullptr;
        for (const auto& e : eigs)
            if (std::abs(std::abs(e.value) - 1.0) <= 0.05 && std::arg(e.value) > 1e-3 &&
                (!base || std::arg(e.value) < std::arg(base->value)))
                base = &e;
        if (!base) throw NumericError("koopman: no circle eigenvalue with positive phase for the harmonics");
        const numerics::GridAxes block{{-3.0, 5.0, 81}, {-1.0, 8.0, 91}};
        const auto queries = koopman::lattice_queries(pipe.cycle, pipe.embedding, 0, 0.0, block);
        for (int k = 1; k <= harmonics; ++k) {
            const auto target = std::pow(base->value, k);
            const koopman::DmdEigenpair* best = nullptr;
            for (const auto& e : eigs)
                if (!best || std::abs(e.value - target) < std::abs(best->value - target)) best = &e;
            const auto field = koopman::eigenfunction_field(pipe.dictionary, best->g, queries);
            std::vector<std::vector<std::string>> out;
            for (Eigen::Index q = 0; q < queries.rows(); ++q)
                out.push_back(cells({queries(q, 0), queries(q, 1), field(q).real(), field(q).imag()}));
            s.csv("koopman_eigenfunction_" + std::to_string(k) + ".csv", {"x", "y", "re", "im"}, out);
        }
    }

    if (kreiss) {
        const auto k = koopman::koopman_kreiss(model, s.cfg.koopman_c, s.cfg.kreiss_search());
        std::cout << "Kreiss constant (c = " << k.c << "): " << k.value << '\n';
        s.csv("koopman_kreiss.csv", {"c", "kreiss", "re", "im"},
              {cells({k.c, k.value, k.argmax_z.real(), k.argmax_z.imag()})});
    }
}

void cmd_sweep_h(const Session& s, const std::string& target) {
    const auto p = s.cfg.params();
    const auto& hs = s.cfg.h_values;
    bool any_failed = false;
    std::vector<std::vector<std::string>> rows;
    if (target == "jacobian") {
        for (const auto& r : jacobian::sweep_h(hs, p, s.cfg.jacobian_samples, s.cfg.cycle_options())) {
            if (!r.ok) {
                std::cerr << "h = " << r.h << ": " << r.error << '\n';
                any_failed = true;
                continue;
            }
            rows.push_back({fmt(r.h), fmt(r.max_alpha), opt(r.max_index)});
        }
        s.csv("sweep_jacobian.csv", {"h", "max_alpha", "max_index"}, rows);
    } else if (target == "floquet") {
        for (const auto& r : floquet::floquet_sweep_h(hs, p, s.cfg.n_floquet, s.cfg.floquet_c, s.cfg.kreiss_search(),
                                                      s.cfg.cycle_options())) {
            if (!r.ok) {
                std::cerr << "h = " << r.h << ": " << r.error << '\n';
                any_failed = true;
                continue;
            }
            rows.push_back(cells({r.h, r.dominant.real(), r.kreiss}));
        }
        s.csv("sweep_floquet.csv", {"h", "dominant", "kreiss"}, rows);
    } else {
        for (const auto& r : koopman::koopman_sweep_h(hs, p, s.cfg.pipeline_options(), s.cfg.koopman_c,
                                                      s.cfg.rank_tol, s.cfg.kreiss_search())) {
            if (!r.ok) {
                std::cerr << "h = " << r.h << ": " << r.error << '\n';
                any_failed = true;
                continue;
            }
            rows.push_back(cells({r.h, r.c, r.kreiss}));
        }
        s.csv("sweep_koopman.csv", {"h", "c", "kreiss"}, rows);
    }
    if (any_failed) throw NumericError("sweep-h: some h values failed (see above)");
}

void cmd_render(const Session& s, const std::string& input, std::string output, const std::string& eigs,
                const std::string& overlay, const std::vector<double>& levels) {
    contour::ContourRendering r;
    r.grid = io::read_grid(input);
    r.levels = levels.empty() ? contour::default_levels() : levels;
    if (!eigs.empty()) r.overlay_points = io::read_points(eigs);
    if (overlay == "circle") r.overlay = contour::Overlay::UnitCircle;
    else if (overlay == "axis") r.overlay = contour::Overlay::ImaginaryAxis;
    if (output.empty()) output = fs::path(input).replace_extension(".svg").string();
    const std::string svg = contour::render_svg(r);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw InputError("cannot write " + output);
    out << svg;
    out.close();
    s.sidecar(output);
    std::cout << "wrote " << output << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudospectra of an ACTH-cortisol delay model"};
    app.set_version_flag("--version", HPA_VERSION);
    app.require_subcommand(1);

    std::string config_file;
    std::string output_dir;
    unsigned threads = 0;
    std::optional<double> h;
    app.add_option("--config", config_file, "Sectioned key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--output-dir", output_dir, "Output directory (overrides HPA_OUTPUT_DIR and the config)");
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--h-override", h, "Override the CRH stimulation h");

    auto* simulate = app.add_subcommand("simulate", "Integrate from a constant history");
    double t_end = 20.0, x0 = dde::kDefaultInitial.x, y0 = dde::kDefaultInitial.y;
    int stride = 10;
    simulate->add_option("--t-end", t_end, "Final time")->check(CLI::PositiveNumber);
    simulate->add_option("--x0", x0, "Constant history for x");
    simulate->add_option("--y0", y0, "Constant history for y");
    simulate->add_option("--stride", stride, "Write every n-th node")->check(CLI::PositiveNumber);

    auto* fixed = app.add_subcommand("fixed-point", "Equilibrium by Newton iteration");
    auto* cycle = app.add_subcommand("limit-cycle", "Detect the attracting periodic orbit");
    cycle->add_option("--stride", stride, "Write every n-th node")->check(CLI::PositiveNumber);

    auto* jsweep = app.add_subcommand("jacobian-sweep", "Stability indicators along the limit cycle");
    auto* jgrid = app.add_subcommand("jacobian-grid", "Pseudospectrum of the frozen delay pencil at jacobian.tau");

    bool kreiss = false, dump = false;
    auto* floq = app.add_subcommand("floquet", "Monodromy spectrum and pseudospectrum");
    floq->add_flag("--kreiss", kreiss, "Also compute the Kreiss constant at floquet.c");
    floq->add_flag("--dump-matrix", dump, "Write the monodromy matrix as CSV");

    std::string dataset_dir;
    int harmonics = 0;
    auto* koop = app.add_subcommand("koopman", "ResDMD spectrum and pseudospectrum");
    koop->add_flag("--kreiss", kreiss, "Also compute the Kreiss constant at koopman.c");
    koop->add_option("--dataset", dataset_dir, "Cache directory for the snapshot data");
    koop->add_option("--harmonics", harmonics, "Write eigenfunctions of lambda_0^k for k = 1..n")
        ->check(CLI::NonNegativeNumber);

    std::string target = "floquet";
    auto* sweep = app.add_subcommand("sweep-h", "Indicators over sweep.h_values");
    sweep->add_option("--target", target, "Analysis to sweep")
        ->check(CLI::IsMember({"jacobian", "floquet", "koopman"}))
        ->required();

    std::string input, output, eigs, overlay = "none";
    std::vector<double> levels;
    auto* render = app.add_subcommand("render", "SVG contour plot of a grid CSV");
    render->add_option("input", input, "Grid CSV (re,im,value)")->required()->check(CLI::ExistingFile);
    render->add_option("-o,--output", output, "SVG path (default: input with .svg)");
    render->add_option("--eigs", eigs, "CSV whose first two columns are eigenvalue markers")
        ->check(CLI::ExistingFile);
    render->add_option("--overlay", overlay, "Stability overlay")->check(CLI::IsMember({"none", "circle", "axis"}));
    render->add_option("--levels", levels, "Contour levels (default: 6 log-spaced in [10^-1.5, 10^-0.25])");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        Session s;
        s.cfg = config_file.empty() ? config::parse("") : config::load(config_file);
        if (const char* env = std::getenv("HPA_OUTPUT_DIR"); env && *env) s.cfg.output_dir = env;
        if (!output_dir.empty()) s.cfg.output_dir = output_dir;
        if (h) s.cfg.h_override = *h;
        s.cfg.validate();
        s.config_hash = config::hash(s.cfg);
        s.command = app.get_subcommands().front()->get_name();
        set_worker_count(threads);
        fs::create_directories(s.cfg.output_dir);

        if (*simulate) cmd_simulate(s, t_end, x0, y0, stride);
        else if (*fixed) cmd_fixed_point(s);
        else if (*cycle) cmd_limit_cycle(s, stride);
        else if (*jsweep) cmd_jacobian_sweep(s);
        else if (*jgrid) cmd_jacobian_grid(s);
        else if (*floq) cmd_floquet(s, kreiss, dump);
        else if (*koop) cmd_koopman(s, kreiss, dataset_dir, harmonics);
        else if (*sweep) cmd_sweep_h(s, target);
        else if (*render) cmd_render(s, input, output, eigs, overlay, levels);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::Input: return kExitUsage;
            case ErrorKind::Numeric: return kExitNumeric;
            case ErrorKind::NonConvergence: return kExitConvergence;
        }
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
