/// Coarse-grained diffusion matrices on cubes.
///
/// For a(x) = nu I + k(x) the pointwise 2d x 2d matrix
///   A(x) = [[s + k^T s^-1 k, -k^T s^-1], [-s^-1 k, s^-1]]
/// is minimized over X = (grad phi, curl psi) with phi, psi vanishing on
/// the cube boundary (or periodic), giving the cube matrix A(U) and from it
/// s(U), s_*(U) and k(U).
///
/// Discretization: conforming P1 elements on a uniform mesh of right
/// triangles (two per square cell) with k sampled at triangle centroids.
/// Discrete minimizers keep the exact algebraic structure (subadditivity
/// for nested meshes, the constant-shift conjugation identity and the
/// average/energy identities of the maximizer).
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superdiff/stats.hpp"
#include "superdiff/stream.hpp"

namespace sdiff {

enum class CellBoundary { Dirichlet, Periodic };
enum class CellSolver { Cholesky, ConjugateGradient };

CellBoundary parse_cell_boundary(const std::string& s);
CellSolver parse_cell_solver(const std::string& s);
std::string to_string(CellBoundary b);
std::string to_string(CellSolver s);

/// Axis-aligned square cube. `cells` is the number of mesh cells per side.
struct Cube {
    double center[2] = {0.0, 0.0};
    double side = 1.0;
    std::size_t cells = 3;
    double spacing() const { return side / static_cast<double>(cells); }
};

/// Cube of side 3^m centred at `center`, meshed at `cells_per_unit`.
Cube triadic_cube(int m, double cells_per_unit, double cx = 0.0, double cy = 0.0);

struct CellOptions {
    CellBoundary boundary = CellBoundary::Dirichlet;
    CellSolver solver = CellSolver::Cholesky;
    /// Relative residual target (CG stopping rule, Cholesky acceptance).
    double tol = 1e-8;
    /// CG iteration cap as a multiple of the cells per side.
    double cg_cap_factor = 50.0;
    bool keep_minimizers = false;
};

/// Discrete minimizers and the centroid field they were computed for.
struct CellMinimizers {
    Cube cube;
    CellBoundary boundary = CellBoundary::Dirichlet;
    double nu = 1.0;
    std::vector<double> k12;                  // per triangle
    std::vector<Eigen::VectorXd> solutions;   // one per basis vector of R^4 (global dofs)
    std::vector<long> dof_of_node;            // node -> dof (phi); psi dofs are offset
    long phi_dofs = 0;
};

struct CoarseMatrices {
    Cube cube;
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d sstar = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
    double residual = 0.0;
    int iterations = 0;  // total CG iterations (0 for Cholesky)
    /// Area average of nu + b^2/nu (the arithmetic-mean bound).
    double arithmetic_bound = 0.0;
    /// Area-average of the centroid stream value k12.
    double mean_k12 = 0.0;
    std::shared_ptr<const CellMinimizers> minimizers;
};

struct SKS {
    Eigen::MatrixXd s, sstar, k;
};

/// Pointwise A for a point matrix a (symmetric part must be positive definite).
Eigen::MatrixXd pointwise_A(const Eigen::MatrixXd& a);

/// A(U) from (s, s_*, k).
Eigen::MatrixXd assemble_bigA(const Eigen::MatrixXd& s, const Eigen::MatrixXd& sstar, const Eigen::MatrixXd& k);

/// Reads s_*^-1 from the lower-right block, k = -s_* (lower-left), and s
/// from the upper-left block minus k^T s_*^-1 k.
SKS extract_s_sstar_k(const Eigen::MatrixXd& A);

/// G_h = [[I, 0], [h, I]] for a d x d matrix h.
Eigen::MatrixXd shift_matrix(const Eigen::MatrixXd& h);

/// Solves the cell problems for a d = 2 stream field on `cube`.
CoarseMatrices coarse_A(const StreamSource& field, double nu, const Cube& cube, const CellOptions& options = {});

/// Single minimization: P.A(U)P for one vector P (independent of coarse_A's
/// polarized assembly; used as an oracle).
double minimize_quadratic(const StreamSource& field, double nu, const Cube& cube, const Eigen::Vector4d& P,
                          const CellOptions& options = {});

/// J(U,p,q) = 1/2 (-p,q).A(U)(-p,q) - p.q.
double J_value(const CoarseMatrices& cm, const Eigen::Vector2d& p, const Eigen::Vector2d& q);

struct SolutionAverages {
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Vector2d flux = Eigen::Vector2d::Zero();
    /// avg 1/2 grad v . s grad v
    double energy = 0.0;
    /// 1/2 e . s_*(U) e
    double predicted_energy = 0.0;
};

/// Averages of the maximizer v(., U, e) recovered from stored minimizers.
SolutionAverages rep_solution_averages(const CoarseMatrices& cm, const Eigen::Vector2d& e);

/// Invariant checks of one CoarseMatrices, as signed margins (>= -tol means ok).
struct CoarseInvariants {
    double loewner = 0.0;          // min eig (s - s_*)
    double harmonic = 0.0;         // min eig (s_* - (avg s^-1)^-1)
    double arithmetic = 0.0;       // min eig (avg(s + k^T s^-1 k) - s)
    double symmetric_k = 0.0;      // min eig ((s - s_*) -/+ (k + k^T)), worst sign
    double reconstruction = 0.0;   // relative Frobenius error of A rebuilt from (s, s_*, k)
};
CoarseInvariants check_invariants(const CoarseMatrices& cm, double nu);

/// Piecewise-constant coarse field a_* = s_* - k^T on the 3^n subcubes of `parent`.
struct CoarseField {
    int n = 0;
    Cube parent;
    std::size_t per_side = 1;
    std::vector<Eigen::Matrix2d> values;  // row-major over subcubes
    std::vector<CoarseMatrices> cells;
};
CoarseField coarse_field(const StreamSource& field, double nu, const Cube& parent, int n, const CellOptions& options = {});

/// Subcubes partitioning `parent` into `per_side`^2 equal cubes on the same mesh.
std::vector<Cube> partition_cube(const Cube& parent, std::size_t per_side);

/// Most negative eigenvalue of avg_children A - A(parent).
double subadditivity_report(const CoarseMatrices& parent, const std::vector<CoarseMatrices>& children);

struct LocalizationReport {
    double error = 0.0;
    double bound = 0.0;
    double grad_sup = 0.0;  // sup |grad (k_L - k_m)| (Frobenius over all index triples)
    Eigen::Matrix2d shift = Eigen::Matrix2d::Zero();
};

/// Compares A_m(U) to A_L(U) conjugated by the average of k_L - k_m over U.
/// `difference` must be the field k_L - k_m. The cube side defines 3^n.
LocalizationReport localization_report(const StreamSource& field_m, const StreamSource& field_L,
                                       const StreamSource& difference, double nu, const Cube& cube,
                                       const CellOptions& options = {});

struct ShomEstimate {
    int m = 0;
    double sbar = 0.0;
    double standard_error = 0.0;
    std::optional<Interval> ci;
    /// Harmonic s_*-side estimate: 1/2 tr (mean s_*^-1)^-1.
    double sstar_bar = 0.0;
    std::vector<double> per_sample_s;      // 1/2 tr s(U)
    std::vector<double> per_sample_sstar;  // 1/2 tr s_*(U)
    std::vector<CoarseMatrices> cells;
};

/// Ensemble estimate of the renormalized diffusivity from one cube solve per source.
ShomEstimate shom_estimate(const std::vector<const StreamSource*>& sources, double nu, int m, const Cube& cube,
                           const CellOptions& options = {}, std::uint64_t bootstrap_seed = 3);

}  // namespace sdiff
