#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpa/dde.hpp"
#include "hpa/numerics.hpp"

namespace hpa::koopman {

using numerics::Complex;
using Eigen::MatrixXd;
using Eigen::VectorXcd;

struct Box {
    double x_min = -3.0;
    double x_max = 5.0;
    double y_min = -1.0;
    double y_max = 8.0;
};

/// Delay embedding x(tau) = (x, y, x(tau - t1), y(tau - t1), ..., x(tau - (d-1) t1), ...)
/// sampled every delta_tau.
struct EmbeddingConfig {
    int d = 10;
    double delta_tau = 0.0;  ///< sampling interval; period / 10 by convention
    Box box;
    int n_init = 10000;
    std::uint64_t seed = 0;
    double step = 1e-3;  ///< integrator step

    void validate() const;
    int dimension() const { return 2 * d; }
};

/// Sets delta_tau = period / 10 from a detected limit cycle.
EmbeddingConfig with_cycle_sampling(EmbeddingConfig cfg, double period);

struct SnapshotDataset {
    MatrixXd x0;  ///< pre-states, one per row
    MatrixXd x1;  ///< images of the rows of x0 after delta_tau
    int skipped = 0;
    EmbeddingConfig config;

    Eigen::Index m() const { return x0.rows(); }
};

/// Embedded state of a trajectory at time t.
Eigen::VectorXd embed(const dde::Trajectory& traj, double t, int d, double lag);

/// Length-three trajectories from n_init uniformly drawn constant histories; emits
/// pairs (x_0 -> x_1) and (x_1 -> x_2) with x_n taken at (d - 1 + n) * delta_tau.
SnapshotDataset generate_snapshots(const dde::NondimParams& p, const EmbeddingConfig& cfg);

/// Writes x0.csv, x1.csv and dataset.json into `dir`.
void save_dataset(const SnapshotDataset& ds, const std::filesystem::path& dir);
SnapshotDataset load_dataset(const std::filesystem::path& dir);

/// Gaussian radial basis functions exp(-|s - c|^2 / (2 scale^2)).
struct RbfDictionary {
    MatrixXd centers;  ///< N x 2d
    double scale = 1.0;

    Eigen::Index size() const { return centers.rows(); }
};

struct KMeansOptions {
    int max_iterations = 300;
    double tolerance = 1e-6;  ///< relative inertia change
};

/// k-means++ seeded Lloyd iterations on the rows of `points`.
MatrixXd kmeans(const MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Centers from k-means on the rows of x0 and x1; scale is the median pairwise
/// distance over (up to) 1000 sampled center pairs.
RbfDictionary build_dictionary(const SnapshotDataset& ds, int n, std::uint64_t seed,
                               const KMeansOptions& options = {});

/// Feature matrix, one row per state.
MatrixXd eval_dictionary(const RbfDictionary& dict, const MatrixXd& states);

/// Empirical-measure Galerkin data: G = Psi0^T Psi0 / M, A = Psi0^T Psi1 / M,
/// L = Psi1^T Psi1 / M.
struct ResDmdMatrices {
    MatrixXd g;
    MatrixXd a;
    MatrixXd l;
};

ResDmdMatrices assemble_matrices(const MatrixXd& psi0, const MatrixXd& psi1);

/// Orthonormalised coordinates of the retained subspace of G: with W = V_r S_r^{-1/2},
/// W^T G W = I. Shared by the eigenvalue and pseudospectrum computations.
class ReducedModel {
public:
    ReducedModel(const ResDmdMatrices& mats, double rank_tol);

    Eigen::Index rank() const { return w_.cols(); }
    const MatrixXd& basis() const { return w_; }
    const MatrixXd& koopman() const { return a_red_; }  ///< W^T A W
    const MatrixXd& residual_gram() const { return l_red_; }  ///< W^T L W

    /// min over g in the retained subspace of the relative residual at z.
    double min_residual(Complex z) const;

private:
    MatrixXd w_;
    MatrixXd a_red_;
    MatrixXd l_red_;
};

struct DmdEigenpair {
    Complex value;
    VectorXcd g;  ///< coefficients in the dictionary, g* G g = 1
};

std::vector<DmdEigenpair> dmd_eigs(const ResDmdMatrices& mats, double rank_tol = 1e-12);

/// sqrt(g*(L - conj(z) A - z A^T + |z|^2 G) g / g* G g).
double residual(Complex z, const VectorXcd& g, const ResDmdMatrices& mats);

numerics::PseudospectrumGrid koopman_pseudospectrum(const ResDmdMatrices& mats, const numerics::GridAxes& axes,
                                                    double rank_tol = 1e-12);
numerics::PseudospectrumGrid koopman_pseudospectrum(const ReducedModel& model, const numerics::GridAxes& axes);

numerics::GridAxes default_koopman_axes();

/// Psi(query) g for each query row.
VectorXcd eigenfunction_field(const RbfDictionary& dict, const VectorXcd& g, const MatrixXd& query_states);

/// Query states along a 2-D grid in the coordinate pair (block, block) of the
/// embedding; the other coordinates follow the limit cycle pulled back from `tau`.
MatrixXd lattice_queries(const dde::LimitCycle& cycle, const EmbeddingConfig& cfg, int block, double tau,
                         const numerics::GridAxes& axes);

numerics::KreissResult koopman_kreiss(const ReducedModel& model, double c, numerics::KreissSearch search);

/// Full pipeline at one h: cycle, snapshots, dictionary, matrices.
struct Pipeline {
    dde::LimitCycle cycle;
    EmbeddingConfig embedding;
    SnapshotDataset data;
    RbfDictionary dictionary;
    ResDmdMatrices matrices;
};

struct PipelineOptions {
    EmbeddingConfig embedding;
    int dictionary_size = 400;
    KMeansOptions kmeans;
    dde::LimitCycleOptions cycle;
};

Pipeline run_pipeline(const dde::NondimParams& p, const PipelineOptions& options);

struct SweepRow {
    double h = 0.0;
    bool ok = false;
    double c = 0.0;
    double kreiss = 0.0;
    std::string error;
};

std::vector<SweepRow> koopman_sweep_h(const std::vector<double>& h_values, const dde::NondimParams& p_template,
                                      const PipelineOptions& options, double c, double rank_tol,
                                      const numerics::KreissSearch& search);

}  // namespace hpa::koopman
