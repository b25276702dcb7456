#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hpa/errors.hpp"
#include "hpa/koopman.hpp"

using namespace hpa;
using namespace hpa::koopman;
using Eigen::VectorXd;

namespace {

MatrixXd random_features(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    MatrixXd out(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = g(rng);
    return out;
}

PipelineOptions small_options() {
    PipelineOptions o;
    o.embedding.n_init = 300;
    o.embedding.seed = 42;
    o.dictionary_size = 100;
    return o;
}

const Pipeline& small_pipeline() {
    static const Pipeline p = run_pipeline(dde::NondimParams{}, small_options());
    return p;
}

}  // namespace

TEST_SUITE("koopman") {

TEST_CASE("identity dynamics") {
    const MatrixXd psi = random_features(50, 6, 1);
    const auto mats = assemble_matrices(psi, psi);
    CHECK((mats.a - mats.g).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((mats.l - mats.g).cwiseAbs().maxCoeff() < 1e-14);

    const auto eigs = dmd_eigs(mats);
    REQUIRE(eigs.size() == 6);
    for (const auto& e : eigs) {
        CHECK(std::abs(e.value - 1.0) < 1e-10);
        CHECK(residual(e.value, e.g, mats) < 1e-6);
        CHECK(residual(0.0, e.g, mats) == doctest::Approx(1.0));
    }

    // Every g has relative residual |1 - z|.
    const ReducedModel model(mats, 1e-12);
    for (Complex z : {Complex(0.3, 0.4), Complex(-1.2, 0.0), Complex(1.0, -0.7)})
        CHECK(model.min_residual(z) == doctest::Approx(std::abs(1.0 - z)).epsilon(1e-9));
    const auto grid = koopman_pseudospectrum(model, {{-1.0, 2.0, 7}, {-1.0, 1.0, 5}});
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(grid.values(i, j) == doctest::Approx(std::abs(1.0 - grid.point(i, j))).epsilon(1e-8));

    numerics::KreissSearch s;
    s.radial = 40;
    s.angular = 32;
    s.r_max = 11.5;
    // Scalar oracle: sup over |z| in (1.5, 11.5] of (|z| - 1.5) / |z - 1|, largest on the positive axis.
    double best = 0.0;
    for (int k = 1; k <= 100000; ++k) {
        const double r = 1.5 + 10.0 * k / 100000.0;
        best = std::max(best, (r - 1.5) / (r - 1.0));
    }
    CHECK(koopman_kreiss(model, 1.5, s).value == doctest::Approx(best).epsilon(1e-6));
    CHECK_THROWS_AS(koopman_kreiss(model, 1.0, s), InputError);
}

TEST_CASE("Gaussian dictionary") {
    RbfDictionary dict;
    dict.centers = MatrixXd::Zero(2, 4);
    dict.centers(1, 0) = 3.0;
    dict.scale = 1.0;
    MatrixXd states = MatrixXd::Zero(2, 4);
    states(0, 1) = 1.0;
    const MatrixXd psi = eval_dictionary(dict, states);
    CHECK(psi(0, 0) == doctest::Approx(std::exp(-0.5)));
    CHECK(psi(1, 0) == doctest::Approx(1.0));
    CHECK(psi(1, 1) == doctest::Approx(std::exp(-4.5)));
    CHECK(psi(0, 1) == doctest::Approx(std::exp(-5.0)));
    CHECK_THROWS_AS(eval_dictionary(dict, MatrixXd::Zero(1, 3)), InputError);
}

TEST_CASE("k-means") {
    const MatrixXd pts = random_features(30, 3, 9);
    SUBCASE("k = M reproduces the points") {
        const MatrixXd c = kmeans(pts, 30, 1);
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            double nearest = 1e300;
            for (Eigen::Index j = 0; j < c.rows(); ++j) nearest = std::min(nearest, (c.row(j) - pts.row(i)).norm());
            CHECK(nearest < 1e-12);
        }
    }
    SUBCASE("two separated blobs") {
        MatrixXd two(40, 2);
        two.topRows(20) = 0.1 * random_features(20, 2, 3);
        two.bottomRows(20) = 0.1 * random_features(20, 2, 4);
        two.bottomRows(20).col(0).array() += 10.0;
        const MatrixXd c = kmeans(two, 2, 5);
        const double lo = std::min(c(0, 0), c(1, 0)), hi = std::max(c(0, 0), c(1, 0));
        CHECK(lo == doctest::Approx(two.topRows(20).col(0).mean()));
        CHECK(hi == doctest::Approx(two.bottomRows(20).col(0).mean()));
    }
    SUBCASE("deterministic in the seed") { CHECK(kmeans(pts, 5, 77) == kmeans(pts, 5, 77)); }
    SUBCASE("invalid k") {
        CHECK_THROWS_AS(kmeans(pts, 0, 1), InputError);
        CHECK_THROWS_AS(kmeans(pts, 31, 1), InputError);
    }
}

TEST_CASE("Galerkin matrices") {
    const MatrixXd psi0 = random_features(80, 10, 2);
    const MatrixXd psi1 = random_features(80, 10, 3);
    const auto mats = assemble_matrices(psi0, psi1);

    SUBCASE("G and L are symmetric positive semidefinite") {
        CHECK((mats.g - mats.g.transpose()).norm() == 0.0);
        CHECK((mats.l - mats.l.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eg(mats.g), el(mats.l);
        CHECK(eg.eigenvalues().minCoeff() >= -1e-12);
        CHECK(el.eigenvalues().minCoeff() >= -1e-12);
    }
    SUBCASE("single snapshot has rank one") {
        const auto one = assemble_matrices(psi0.topRows(1), psi1.topRows(1));
        CHECK(ReducedModel(one, 1e-12).rank() == 1);
    }
    SUBCASE("residual equals the direct snapshot residual") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> nd;
        for (int trial = 0; trial < 5; ++trial) {
            VectorXcd g(10);
            for (auto& v : g) v = {nd(rng), nd(rng)};
            const Complex z{nd(rng), nd(rng)};
            const VectorXcd lhs = psi1.cast<Complex>() * g - z * (psi0.cast<Complex>() * g);
            const double direct = lhs.norm() / (psi0.cast<Complex>() * g).norm();
            CHECK(residual(z, g, mats) == doctest::Approx(direct).epsilon(1e-10));
        }
    }
    SUBCASE("the minimal residual is a lower bound over the subspace") {
        const ReducedModel model(mats, 1e-12);
        std::mt19937_64 rng(12);
        std::normal_distribution<double> nd;
        for (int trial = 0; trial < 10; ++trial) {
            const Complex z{nd(rng), nd(rng)};
            const double best = model.min_residual(z);
            for (int k = 0; k < 20; ++k) {
                VectorXcd g(10);
                for (auto& v : g) v = {nd(rng), nd(rng)};
                CHECK(best <= residual(z, g, mats) + 1e-10);
            }
            CHECK(model.min_residual(std::conj(z)) == doctest::Approx(best).epsilon(1e-9));
        }
    }
    SUBCASE("DMD eigenpairs are normalised and attain their residual") {
        const ReducedModel model(mats, 1e-12);
        for (const auto& e : dmd_eigs(mats)) {
            const double gn = (e.g.adjoint() * mats.g.cast<Complex>() * e.g)(0).real();
            CHECK(gn == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(model.min_residual(e.value) <= residual(e.value, e.g, mats) + 1e-8);
        }
    }
    SUBCASE("shape checks") {
        CHECK_THROWS_AS(assemble_matrices(psi0, psi1.leftCols(5)), InputError);
        CHECK_THROWS_AS(ReducedModel(mats, 0.0), InputError);
    }
}

TEST_CASE("snapshot data") {
    const auto& pl = small_pipeline();
    const auto& ds = pl.data;
    CHECK(ds.m() == 2 * (300 - ds.skipped));
    CHECK(ds.x0.cols() == 20);
    // Consecutive pairs share the middle state.
    for (Eigen::Index r = 0; r < ds.m(); r += 2) CHECK(ds.x1.row(r) == ds.x0.row(r + 1));
    CHECK(pl.embedding.delta_tau == doctest::Approx(pl.cycle.period / 10));

    SUBCASE("seeded determinism") {
        const auto again = generate_snapshots(dde::NondimParams{}, pl.embedding);
        CHECK(again.x0 == ds.x0);
        CHECK(again.x1 == ds.x1);
        auto other = pl.embedding;
        other.seed = 43;
        CHECK(generate_snapshots(dde::NondimParams{}, other).x0 != ds.x0);
    }
    SUBCASE("dataset round trip") {
        const auto dir = std::filesystem::temp_directory_path() / "hpa_dataset_roundtrip";
        std::filesystem::remove_all(dir);
        save_dataset(ds, dir);
        const auto back = load_dataset(dir);
        CHECK(back.x0 == ds.x0);
        CHECK(back.x1 == ds.x1);
        CHECK(back.skipped == ds.skipped);
        CHECK(back.config.seed == ds.config.seed);
        CHECK(back.config.delta_tau == ds.config.delta_tau);
        std::filesystem::remove_all(dir);
        CHECK_THROWS_AS(load_dataset(dir), InputError);
    }
    SUBCASE("dictionary centers lie in the data bounding box") {
        MatrixXd stacked(2 * ds.m(), ds.x0.cols());
        stacked << ds.x0, ds.x1;
        const VectorXd lo = stacked.colwise().minCoeff(), hi = stacked.colwise().maxCoeff();
        REQUIRE(pl.dictionary.size() == 100);
        for (Eigen::Index i = 0; i < pl.dictionary.size(); ++i) {
            CHECK((pl.dictionary.centers.row(i).transpose().array() >= lo.array() - 1e-12).all());
            CHECK((pl.dictionary.centers.row(i).transpose().array() <= hi.array() + 1e-12).all());
        }
        CHECK(pl.dictionary.scale > 0);
    }
    SUBCASE("embedding reads the lagged trajectory") {
        const auto traj = dde::integrate(dde::NondimParams{}, dde::State{1.0, 2.0}, 2.0);
        const VectorXd v = embed(traj, 1.5, 4, 0.15);
        CHECK(v(6) == traj(1.5 - 0.45).x);
        CHECK(v(7) == traj(1.5 - 0.45).y);
    }
}

TEST_CASE("eigenvalues of the small model") {
    const auto& pl = small_pipeline();
    const auto eigs = dmd_eigs(pl.matrices);
    REQUIRE(!eigs.empty());
    // The constant function is invariant, so an eigenvalue near 1 must exist.
    double closest = 1e300;
    for (const auto& e : eigs) closest = std::min(closest, std::abs(e.value - 1.0));
    CHECK(closest < 0.05);

    const ReducedModel model(pl.matrices, 1e-12);
    const auto grid = koopman_pseudospectrum(model, {{-1.5, 1.5, 11}, {-1.5, 1.5, 11}});
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            CHECK(grid.values(i, j) >= 0.0);
            CHECK(grid.values(i, j) == doctest::Approx(model.min_residual(grid.point(i, j))).epsilon(1e-9));
        }
}

TEST_CASE("lattice queries vary only the chosen block") {
    const auto& pl = small_pipeline();
    const numerics::GridAxes axes{{0.0, 2.0, 3}, {1.0, 5.0, 4}};
    const MatrixXd q = lattice_queries(pl.cycle, pl.embedding, 2, 0.4, axes);
    REQUIRE(q.rows() == 12);
    CHECK(q(0, 4) == 0.0);
    CHECK(q(0, 5) == 1.0);
    CHECK(q(11, 4) == 2.0);
    CHECK(q(11, 5) == 5.0);
    CHECK(q(5, 0) == pl.cycle.at(0.4).x);
    CHECK(q(5, 7) == pl.cycle.at(0.4 - 3 * pl.cycle.params.t1).y);
    CHECK_THROWS_AS(lattice_queries(pl.cycle, pl.embedding, 10, 0.0, axes), InputError);
}

}  // TEST_SUITE
