#include "hpa/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hpa/errors.hpp"
#include "hpa/parallel.hpp"

namespace hpa::koopman {

void EmbeddingConfig::validate() const {
    if (d < 2) throw InputError("embedding: d must be >= 2");
    if (!(delta_tau > 0)) throw InputError("embedding: delta_tau must be positive (set from the cycle period)");
    if (!(box.x_max > box.x_min && box.y_max > box.y_min)) throw InputError("embedding: empty box");
    if (n_init < 1) throw InputError("embedding: n_init must be >= 1");
    if (!(step > 0)) throw InputError("embedding: step must be positive");
}

EmbeddingConfig with_cycle_sampling(EmbeddingConfig cfg, double period) {
    if (!(period > 0)) throw InputError("with_cycle_sampling: period must be positive");
    cfg.delta_tau = period / 10.0;
    return cfg;
}

Eigen::VectorXd embed(const dde::Trajectory& traj, double t, int d, double lag) {
    Eigen::VectorXd v(2 * d);
    for (int k = 0; k < d; ++k) {
        const dde::State s = traj(t - lag * k);
        v(2 * k) = s.x;
        v(2 * k + 1) = s.y;
    }
    return v;
}

SnapshotDataset generate_snapshots(const dde::NondimParams& p, const EmbeddingConfig& cfg) {
    p.validate();
    cfg.validate();

    // Draw all initial points up front so the sample does not depend on scheduling.
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> ux(cfg.box.x_min, cfg.box.x_max);
    std::uniform_real_distribution<double> uy(cfg.box.y_min, cfg.box.y_max);
    std::vector<dde::State> starts(static_cast<std::size_t>(cfg.n_init));
    for (auto& s : starts) {
        s.x = ux(rng);
        s.y = uy(rng);
    }

    const int dim = cfg.dimension();
    const double t_end = (cfg.d + 1) * cfg.delta_tau;
    std::vector<Eigen::MatrixXd> triples(starts.size());
    std::vector<char> ok(starts.size(), 0);
    parallel_for(starts.size(), [&](std::size_t i) {
        try {
            const auto traj = dde::integrate(p, starts[i], t_end, cfg.step);
            Eigen::MatrixXd rows(3, dim);
            for (int n = 0; n < 3; ++n)
                rows.row(n) = embed(traj, (cfg.d - 1 + n) * cfg.delta_tau, cfg.d, p.t1).transpose();
            triples[i] = std::move(rows);
            ok[i] = 1;
        } catch (const NumericError&) {
            ok[i] = 0;
        }
    });

    SnapshotDataset ds;
    ds.config = cfg;
    const auto good = static_cast<Eigen::Index>(std::count(ok.begin(), ok.end(), 1));
    ds.skipped = cfg.n_init - static_cast<int>(good);
    ds.x0.resize(2 * good, dim);
    ds.x1.resize(2 * good, dim);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (!ok[i]) continue;
        ds.x0.row(r) = triples[i].row(0);
        ds.x1.row(r) = triples[i].row(1);
        ds.x0.row(r + 1) = triples[i].row(1);
        ds.x1.row(r + 1) = triples[i].row(2);
        r += 2;
    }
    return ds;
}

namespace {

void write_matrix(const MatrixXd& m, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw InputError("cannot write " + file.string());
    out.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

MatrixXd read_matrix(const std::filesystem::path& file, Eigen::Index cols) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot read " + file.string());
    std::vector<double> data;
    std::string line;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Eigen::Index count = 0;
        while (std::getline(ss, cell, ',')) {
            data.push_back(std::stod(cell));
            ++count;
        }
        if (count != cols) throw InputError("malformed row in " + file.string());
        ++rows;
    }
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)];
    return m;
}

}  // namespace

void save_dataset(const SnapshotDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix(ds.x0, dir / "x0.csv");
    write_matrix(ds.x1, dir / "x1.csv");
    const auto& c = ds.config;
    nlohmann::json meta = {
        {"seed", c.seed},
        {"d", c.d},
        {"delta_tau", c.delta_tau},
        {"box", {c.box.x_min, c.box.x_max, c.box.y_min, c.box.y_max}},
        {"n_init", c.n_init},
        {"step", c.step},
        {"M", ds.m()},
        {"skipped", ds.skipped},
    };
    std::ofstream out(dir / "dataset.json");
    out << meta.dump(2) << '\n';
}

SnapshotDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.json");
    if (!in) throw InputError("missing dataset.json in " + dir.string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("dataset.json: ") + e.what());
    }
    SnapshotDataset ds;
    auto& c = ds.config;
    try {
        c.seed = meta.at("seed").get<std::uint64_t>();
        c.d = meta.at("d").get<int>();
        c.delta_tau = meta.at("delta_tau").get<double>();
        const auto box = meta.at("box").get<std::vector<double>>();
        if (box.size() != 4) throw InputError("dataset.json: box needs 4 values");
        c.box = {box[0], box[1], box[2], box[3]};
        c.n_init = meta.at("n_init").get<int>();
        c.step = meta.at("step").get<double>();
        ds.skipped = meta.at("skipped").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("dataset.json: ") + e.what());
    }
    c.validate();
    ds.x0 = read_matrix(dir / "x0.csv", c.dimension());
    ds.x1 = read_matrix(dir / "x1.csv", c.dimension());
    if (ds.x0.rows() != ds.x1.rows() || ds.x0.rows() != meta.at("M").get<Eigen::Index>())
        throw InputError("dataset row counts disagree with dataset.json");
    return ds;
}

namespace {

// Squared distances between every row of `a` and every row of `b`.
MatrixXd squared_distances(const MatrixXd& a, const MatrixXd& b) {
    const Eigen::VectorXd na = a.rowwise().squaredNorm();
    const Eigen::VectorXd nb = b.rowwise().squaredNorm();
    MatrixXd d = -2.0 * a * b.transpose();
    d.colwise() += na;
    d.rowwise() += nb.transpose();
    return d.cwiseMax(0.0);
}

}  // namespace

MatrixXd kmeans(const MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options) {
    const Eigen::Index n = points.rows();
    const Eigen::Index dim = points.cols();
    if (k < 1 || k > n) throw InputError("kmeans: need 1 <= k <= number of points");

    std::mt19937_64 rng(seed);
    MatrixXd centers(k, dim);

    // k-means++ seeding.
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));
    Eigen::VectorXd nearest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = nearest.sum();
        Eigen::Index chosen = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (chosen = 0; chosen < n - 1; ++chosen) {
                target -= nearest(chosen);
                if (target <= 0) break;
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(c) = points.row(chosen);
        nearest = nearest.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<Eigen::Index> label(static_cast<std::size_t>(n), 0);
    double previous = std::numeric_limits<double>::infinity();
    int reseeds = 0;
    for (int it = 0; it < options.max_iterations; ++it) {
        const MatrixXd d2 = squared_distances(points, centers);
        double inertia = 0.0;
        Eigen::VectorXd own(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index j;
            own(i) = d2.row(i).minCoeff(&j);
            label[static_cast<std::size_t>(i)] = j;
            inertia += own(i);
        }

        MatrixXd sums = MatrixXd::Zero(k, dim);
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(label[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts(label[static_cast<std::size_t>(i)]);
        }
        bool reseeded = false;
        for (int c = 0; c < k; ++c) {
            if (counts(c) > 0) {
                centers.row(c) = sums.row(c) / counts(c);
                continue;
            }
            // Empty cluster: restart it at the point farthest from its center.
            if (++reseeds > 10 * k) throw ConvergenceError("kmeans: repeated empty clusters");
            Eigen::Index far;
            own.maxCoeff(&far);
            centers.row(c) = points.row(far);
            own(far) = 0.0;
            reseeded = true;
        }

        if (!reseeded && std::isfinite(previous) &&
            std::abs(previous - inertia) <= options.tolerance * std::max(previous, 1e-300))
            break;
        if (!reseeded && inertia == 0.0) break;
        previous = inertia;
    }
    return centers;
}

RbfDictionary build_dictionary(const SnapshotDataset& ds, int n, std::uint64_t seed, const KMeansOptions& options) {
    if (ds.m() < 1) throw InputError("build_dictionary: empty dataset");
    if (n < 1 || n > ds.m()) throw InputError("build_dictionary: need 1 <= N <= M");
    MatrixXd all(2 * ds.m(), ds.x0.cols());
    all << ds.x0, ds.x1;

    RbfDictionary dict;
    dict.centers = kmeans(all, n, seed, options);

    std::vector<double> dists;
    const Eigen::Index nc = dict.centers.rows();
    const Eigen::Index all_pairs = nc * (nc - 1) / 2;
    if (all_pairs <= 1000) {
        for (Eigen::Index i = 0; i < nc; ++i)
            for (Eigen::Index j = i + 1; j < nc; ++j)
                dists.push_back((dict.centers.row(i) - dict.centers.row(j)).norm());
    } else {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_int_distribution<Eigen::Index> pick(0, nc - 1);
        while (dists.size() < 1000) {
            const Eigen::Index i = pick(rng);
            const Eigen::Index j = pick(rng);
            if (i == j) continue;
            dists.push_back((dict.centers.row(i) - dict.centers.row(j)).norm());
        }
    }
    if (dists.empty()) {
        dict.scale = 1.0;
    } else {
        auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
        std::nth_element(dists.begin(), mid, dists.end());
        dict.scale = *mid;
    }
    if (!(dict.scale > 0) || !std::isfinite(dict.scale)) dict.scale = 1.0;
    return dict;
}

MatrixXd eval_dictionary(const RbfDictionary& dict, const MatrixXd& states) {
    if (states.cols() != dict.centers.cols())
        throw InputError("eval_dictionary: state dimension does not match the centers");
    const MatrixXd d2 = squared_distances(states, dict.centers);
    return (-d2 / (2.0 * dict.scale * dict.scale)).array().exp().matrix();
}

ResDmdMatrices assemble_matrices(const MatrixXd& psi0, const MatrixXd& psi1) {
    if (psi0.rows() != psi1.rows() || psi0.cols() != psi1.cols())
        throw InputError("assemble_matrices: feature matrices must have equal shapes");
    if (psi0.rows() < 1) throw InputError("assemble_matrices: no snapshots");
    const double inv_m = 1.0 / static_cast<double>(psi0.rows());
    ResDmdMatrices mats;
    mats.g = (psi0.transpose() * psi0) * inv_m;
    mats.a = (psi0.transpose() * psi1) * inv_m;
    mats.l = (psi1.transpose() * psi1) * inv_m;
    // Symmetrise away round-off.
    mats.g = 0.5 * (mats.g + mats.g.transpose()).eval();
    mats.l = 0.5 * (mats.l + mats.l.transpose()).eval();
    return mats;
}

ReducedModel::ReducedModel(const ResDmdMatrices& mats, double rank_tol) {
    if (!(rank_tol > 0 && rank_tol < 1)) throw InputError("rank_tol must lie in (0, 1)");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(mats.g);
    if (eig.info() != Eigen::Success) throw ConvergenceError("ResDMD: eigensolver failed on G");
    const Eigen::VectorXd& s = eig.eigenvalues();
    const double s_max = s.maxCoeff();
    if (!(s_max > 0)) throw NumericError("ResDMD: G is numerically zero");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = s.size() - 1; i >= 0; --i)
        if (s(i) > rank_tol * s_max) keep.push_back(i);
    w_.resize(mats.g.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        w_.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(keep[c]) / std::sqrt(s(keep[c]));
    a_red_ = w_.transpose() * mats.a * w_;
    l_red_ = w_.transpose() * mats.l * w_;
    l_red_ = 0.5 * (l_red_ + l_red_.transpose()).eval();
}

double ReducedModel::min_residual(Complex z) const {
    double lowest;
    if (z.imag() == 0.0) {
        const double x = z.real();
        MatrixXd h = l_red_ - x * (a_red_ + a_red_.transpose());
        h.diagonal().array() += x * x;
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h, Eigen::EigenvaluesOnly);
        lowest = eig.eigenvalues()(0);
    } else {
        Eigen::MatrixXcd h = l_red_.cast<Complex>() - std::conj(z) * a_red_.cast<Complex>() -
                             z * a_red_.transpose().cast<Complex>();
        h.diagonal().array() += std::norm(z);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
        lowest = eig.eigenvalues()(0);
    }
    return std::sqrt(std::max(lowest, 0.0));
}

std::vector<DmdEigenpair> dmd_eigs(const ResDmdMatrices& mats, double rank_tol) {
    const ReducedModel model(mats, rank_tol);
    Eigen::EigenSolver<MatrixXd> eig(model.koopman());
    if (eig.info() != Eigen::Success) throw ConvergenceError("dmd_eigs: eigensolver failed");
    std::vector<DmdEigenpair> out;
    for (Eigen::Index k = 0; k < model.rank(); ++k) {
        Eigen::VectorXcd c = eig.eigenvectors().col(k);
        const double len = c.norm();
        if (len > 0) c /= len;
        out.push_back({eig.eigenvalues()(k), model.basis().cast<Complex>() * c});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const DmdEigenpair& a, const DmdEigenpair& b) { return std::abs(a.value) > std::abs(b.value); });
    return out;
}

double residual(Complex z, const VectorXcd& g, const ResDmdMatrices& mats) {
    const Eigen::MatrixXcd gc = mats.g.cast<Complex>();
    const Eigen::MatrixXcd ac = mats.a.cast<Complex>();
    const Eigen::MatrixXcd lc = mats.l.cast<Complex>();
    const double norm2 = (g.adjoint() * gc * g)(0).real();
    if (!(norm2 > 0)) throw InputError("residual: g* G g must be positive");
    const Complex gag = (g.adjoint() * ac * g)(0);
    const Complex gatg = (g.adjoint() * ac.transpose() * g)(0);
    const double num = (g.adjoint() * lc * g)(0).real() - (std::conj(z) * gag).real() - (z * gatg).real() +
                       std::norm(z) * norm2;
    return std::sqrt(std::max(num, 0.0) / norm2);
}

numerics::PseudospectrumGrid koopman_pseudospectrum(const ReducedModel& model, const numerics::GridAxes& axes) {
    return numerics::evaluate_grid(axes, [&](Complex z) { return model.min_residual(z); }, true);
}

numerics::PseudospectrumGrid koopman_pseudospectrum(const ResDmdMatrices& mats, const numerics::GridAxes& axes,
                                                    double rank_tol) {
    return koopman_pseudospectrum(ReducedModel(mats, rank_tol), axes);
}

numerics::GridAxes default_koopman_axes() { return {{-1.5, 1.5, 201}, {-1.5, 1.5, 201}}; }

VectorXcd eigenfunction_field(const RbfDictionary& dict, const VectorXcd& g, const MatrixXd& query_states) {
    if (g.size() != dict.size()) throw InputError("eigenfunction_field: coefficient length must equal N");
    return eval_dictionary(dict, query_states).cast<Complex>() * g;
}

MatrixXd lattice_queries(const dde::LimitCycle& cycle, const EmbeddingConfig& cfg, int block, double tau,
                         const numerics::GridAxes& axes) {
    if (block < 0 || block >= cfg.d) throw InputError("lattice_queries: block out of range");
    const auto xs = axes.re.samples();
    const auto ys = axes.im.samples();
    const double lag = cycle.params.t1;
    Eigen::VectorXd base(cfg.dimension());
    for (int k = 0; k < cfg.d; ++k) {
        const dde::State s = cycle.at(tau - lag * k);
        base(2 * k) = s.x;
        base(2 * k + 1) = s.y;
    }
    MatrixXd q(static_cast<Eigen::Index>(xs.size() * ys.size()), cfg.dimension());
    Eigen::Index row = 0;
    for (double xv : xs) {
        for (double yv : ys) {
            q.row(row) = base.transpose();
            q(row, 2 * block) = xv;
            q(row, 2 * block + 1) = yv;
            ++row;
        }
    }
    return q;
}

numerics::KreissResult koopman_kreiss(const ReducedModel& model, double c, numerics::KreissSearch search) {
    Eigen::EigenSolver<MatrixXd> eig(model.koopman(), false);
    const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (radius >= c) {
        std::ostringstream msg;
        msg << "koopman_kreiss: retained spectral radius " << radius << " >= c = " << c << "; use a larger c";
        throw InputError(msg.str());
    }
    search.conjugate_symmetric = true;
    return numerics::kreiss_constant(
        [&](Complex z) {
            const double r = model.min_residual(z);
            return r > 0 ? 1.0 / r : std::numeric_limits<double>::infinity();
        },
        c, search);
}

Pipeline run_pipeline(const dde::NondimParams& p, const PipelineOptions& options) {
    Pipeline out;
    out.cycle = dde::find_limit_cycle(p, options.cycle);
    out.embedding = with_cycle_sampling(options.embedding, out.cycle.period);
    out.data = generate_snapshots(p, out.embedding);
    out.dictionary = build_dictionary(out.data, options.dictionary_size, options.embedding.seed, options.kmeans);
    out.matrices = assemble_matrices(eval_dictionary(out.dictionary, out.data.x0),
                                     eval_dictionary(out.dictionary, out.data.x1));
    return out;
}

std::vector<SweepRow> koopman_sweep_h(const std::vector<double>& h_values, const dde::NondimParams& p_template,
                                      const PipelineOptions& options, double c, double rank_tol,
                                      const numerics::KreissSearch& search) {
    std::vector<SweepRow> rows;
    for (double h : h_values) {
        SweepRow row;
        row.h = h;
        row.c = c;
        try {
            dde::NondimParams p = p_template;
            p.h = h;
            const Pipeline pipe = run_pipeline(p, options);
            const ReducedModel model(pipe.matrices, rank_tol);
            row.kreiss = koopman_kreiss(model, c, search).value;
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hpa::koopman
