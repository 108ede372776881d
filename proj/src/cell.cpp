#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/CholmodSupport>
#include <Eigen/Sparse>

#include "superdiff/coarse.hpp"

namespace sdiff {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Node offsets that can share a triangle in the two-triangle split of a square.
constexpr std::array<std::array<int, 2>, 7> kOffsets{{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}}};
constexpr int kSlots = 14;

int offset_slot(int di, int dj) {
    for (int s = 0; s < 7; ++s)
        if (kOffsets[s][0] == di && kOffsets[s][1] == dj) return s;
    throw std::logic_error("triangle vertices are not mesh neighbours");
}

// Vertex offsets and unit gradients (times h) of the two triangles per cell.
struct TriangleShape {
    int vi[3], vj[3];
    double gx[3], gy[3];
    double cx, cy;  // centroid in cell units
};
constexpr TriangleShape kShapes[2] = {
    {{0, 1, 1}, {0, 0, 1}, {-1, 1, 0}, {0, -1, 1}, 2.0 / 3.0, 1.0 / 3.0},
    {{0, 1, 0}, {0, 1, 1}, {0, 1, -1}, {-1, 0, 1}, 1.0 / 3.0, 2.0 / 3.0},
};

Eigen::Matrix4d local_bigA(double nu, double b) {
    // k = [[0, b], [-b, 0]]; k^T k = b^2 I.
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    const double inv = 1.0 / nu;
    A(0, 0) = A(1, 1) = nu + b * b * inv;
    A(2, 2) = A(3, 3) = inv;
    // -k^T s^-1 = k / nu in the upper-right block.
    A(0, 3) = A(3, 0) = b * inv;
    A(1, 2) = A(2, 1) = -b * inv;
    return A;
}

// B (4 x 6) mapping local (phi0..2, psi0..2) to (u1, u2, w1, w2) with
// w = (d2 psi, -d1 psi).
Eigen::Matrix<double, 4, 6> local_B(const TriangleShape& t, double h) {
    Eigen::Matrix<double, 4, 6> B = Eigen::Matrix<double, 4, 6>::Zero();
    for (int v = 0; v < 3; ++v) {
        B(0, v) = t.gx[v] / h;
        B(1, v) = t.gy[v] / h;
        B(2, 3 + v) = t.gy[v] / h;
        B(3, 3 + v) = -t.gx[v] / h;
    }
    return B;
}

struct Mesh {
    std::size_t M = 0;
    double h = 0.0;
    double x0 = 0.0, y0 = 0.0;
    bool periodic = false;
    std::vector<long> dof;  // per node on the (M+1)^2 lattice
    long nphi = 0;

    long node_dof(long i, long j) const {
        if (periodic) {
            const long m = static_cast<long>(M);
            i = ((i % m) + m) % m;
            j = ((j % m) + m) % m;
        } else if (i < 0 || j < 0 || i > static_cast<long>(M) || j > static_cast<long>(M)) {
            return -1;
        }
        return dof[static_cast<std::size_t>(j) * (M + 1) + static_cast<std::size_t>(i)];
    }
};

Mesh build_mesh(const Cube& cube, CellBoundary bc) {
    if (cube.cells < 3) throw std::invalid_argument("degenerate cube: fewer than 3 cells per side");
    if (!(cube.side > 0.0)) throw std::invalid_argument("cube side must be positive");
    Mesh mesh;
    mesh.M = cube.cells;
    mesh.h = cube.spacing();
    mesh.x0 = cube.center[0] - 0.5 * cube.side;
    mesh.y0 = cube.center[1] - 0.5 * cube.side;
    mesh.periodic = bc == CellBoundary::Periodic;
    const std::size_t np = mesh.M + 1;
    mesh.dof.assign(np * np, -1);
    long next = 0;
    for (std::size_t j = 0; j < np; ++j) {
        for (std::size_t i = 0; i < np; ++i) {
            bool active;
            if (mesh.periodic) active = i < mesh.M && j < mesh.M && (i != 0 || j != 0);  // one node pinned
            else active = i > 0 && j > 0 && i < mesh.M && j < mesh.M;
            if (active) mesh.dof[j * np + i] = next++;
        }
    }
    mesh.nphi = next;
    return mesh;
}

std::vector<double> sample_centroids(const StreamSource& field, const Mesh& mesh) {
    if (field.dim() != 2) throw std::invalid_argument("cell problems are implemented for d = 2 only");
    const std::size_t M = mesh.M;
    std::vector<double> k(2 * M * M);
    for (std::size_t cj = 0; cj < M; ++cj) {
        for (std::size_t ci = 0; ci < M; ++ci) {
            for (int t = 0; t < 2; ++t) {
                const double x[3] = {mesh.x0 + (static_cast<double>(ci) + kShapes[t].cx) * mesh.h,
                                     mesh.y0 + (static_cast<double>(cj) + kShapes[t].cy) * mesh.h, 0.0};
                StreamSample s;
                field.sample(x, 0, s);
                k[2 * (cj * M + ci) + static_cast<std::size_t>(t)] = s.comp[0].value;
            }
        }
    }
    return k;
}

template <class F>
void for_each_triangle(const Mesh& mesh, F&& f) {
    const std::size_t M = mesh.M;
    for (std::size_t cj = 0; cj < M; ++cj)
        for (std::size_t ci = 0; ci < M; ++ci)
            for (int t = 0; t < 2; ++t) {
                std::array<long, 6> d{};
                for (int v = 0; v < 3; ++v) {
                    const long n = mesh.node_dof(static_cast<long>(ci) + kShapes[t].vi[v], static_cast<long>(cj) + kShapes[t].vj[v]);
                    d[v] = n;
                    d[3 + v] = n < 0 ? -1 : n + mesh.nphi;
                }
                f(2 * (cj * M + ci) + static_cast<std::size_t>(t), t, ci, cj, d);
            }
}

struct System {
    SpMat K;  // lower triangle
    Eigen::Matrix<double, Eigen::Dynamic, 4> rhs;
};

System assemble(const Mesh& mesh, const std::vector<double>& k12, double nu) {
    const long n = 2 * mesh.nphi;
    if (n == 0) throw std::invalid_argument("cell problem has no unknowns");
    std::vector<double> vals(static_cast<std::size_t>(n) * kSlots, 0.0);
    System sys;
    sys.rhs.setZero(n, 4);
    const double w = 1.0 / (2.0 * static_cast<double>(mesh.M * mesh.M));
    Eigen::Matrix<double, 4, 6> B[2] = {local_B(kShapes[0], mesh.h), local_B(kShapes[1], mesh.h)};
    for_each_triangle(mesh, [&](std::size_t tri, int t, std::size_t, std::size_t, const std::array<long, 6>& d) {
        const Eigen::Matrix4d A = local_bigA(nu, k12[tri]);
        const Eigen::Matrix<double, 6, 4> BtA = B[t].transpose() * A;
        const Eigen::Matrix<double, 6, 6> Kt = w * BtA * B[t];
        for (int a = 0; a < 6; ++a) {
            if (d[a] < 0) continue;
            sys.rhs.row(d[a]) -= w * BtA.row(a);
            for (int b = 0; b < 6; ++b) {
                if (d[b] < 0) continue;
                const int va = a % 3, vb = b % 3;
                const int slot = offset_slot(kShapes[t].vi[vb] - kShapes[t].vi[va], kShapes[t].vj[vb] - kShapes[t].vj[va]);
                vals[static_cast<std::size_t>(d[a]) * kSlots + static_cast<std::size_t>(2 * slot + b / 3)] += Kt(a, b);
            }
        }
    });
    // Column c of the lower triangle: rows r >= c among the 14 neighbour slots.
    std::vector<long> node_i(static_cast<std::size_t>(mesh.nphi)), node_j(static_cast<std::size_t>(mesh.nphi));
    const std::size_t np = mesh.M + 1;
    for (std::size_t idx = 0; idx < mesh.dof.size(); ++idx) {
        const long d = mesh.dof[idx];
        if (d >= 0) {
            node_i[static_cast<std::size_t>(d)] = static_cast<long>(idx % np);
            node_j[static_cast<std::size_t>(d)] = static_cast<long>(idx / np);
        }
    }
    if (n > std::numeric_limits<int>::max() / kSlots) throw std::invalid_argument("cell problem too large");
    std::vector<int> outer(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> inner;
    std::vector<double> data;
    inner.reserve(static_cast<std::size_t>(n) * 8);
    data.reserve(static_cast<std::size_t>(n) * 8);
    std::vector<std::pair<long, double>> col;
    for (long c = 0; c < n; ++c) {
        const long node = c % mesh.nphi;
        const long field = c / mesh.nphi;
        (void)field;
        col.clear();
        for (int s = 0; s < 7; ++s) {
            const long nd = mesh.node_dof(node_i[static_cast<std::size_t>(node)] + kOffsets[s][0],
                                          node_j[static_cast<std::size_t>(node)] + kOffsets[s][1]);
            if (nd < 0) continue;
            for (int f = 0; f < 2; ++f) {
                const long r = nd + f * mesh.nphi;
                const double v = vals[static_cast<std::size_t>(c) * kSlots + static_cast<std::size_t>(2 * s + f)];
                if (r >= c && v != 0.0) col.emplace_back(r, v);
                else if (r == c) col.emplace_back(r, v);
            }
        }
        std::sort(col.begin(), col.end());
        // Merge duplicates that appear on very small periodic meshes.
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (!inner.empty() && static_cast<long>(inner.size()) > outer[static_cast<std::size_t>(c)] && inner.back() == col[i].first) {
                data.back() += col[i].second;
            } else {
                inner.push_back(static_cast<int>(col[i].first));
                data.push_back(col[i].second);
            }
        }
        outer[static_cast<std::size_t>(c) + 1] = static_cast<int>(inner.size());
    }
    sys.K = Eigen::Map<const SpMat>(static_cast<int>(n), static_cast<int>(n), static_cast<int>(inner.size()), outer.data(), inner.data(), data.data());
    return sys;
}

struct SolveResult {
    Eigen::Matrix<double, Eigen::Dynamic, 4> X;
    double residual = 0.0;
    int iterations = 0;
};

double condition_from_lanczos(const std::vector<double>& alpha, const std::vector<double>& beta) {
    const std::size_t m = alpha.size();
    if (m == 0) return 1.0;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<long>(m), static_cast<long>(m));
    for (std::size_t j = 0; j < m; ++j) {
        T(static_cast<long>(j), static_cast<long>(j)) = 1.0 / alpha[j] + (j > 0 ? beta[j - 1] / alpha[j - 1] : 0.0);
        if (j + 1 < m) {
            const double off = std::sqrt(beta[j]) / alpha[j];
            T(static_cast<long>(j), static_cast<long>(j + 1)) = T(static_cast<long>(j + 1), static_cast<long>(j)) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    return lo > 0 ? hi / lo : INFINITY;
}

SolveResult solve_cg(const SpMat& K, const Eigen::Matrix<double, Eigen::Dynamic, 4>& rhs, double tol, long cap) {
    const auto Ks = K.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd inv_diag = K.diagonal().cwiseInverse();
    SolveResult res;
    res.X.setZero(rhs.rows(), rhs.cols());
    for (long c = 0; c < rhs.cols(); ++c) {
        const Eigen::VectorXd b = rhs.col(c);
        const double bnorm = b.norm();
        if (bnorm == 0.0) continue;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
        Eigen::VectorXd r = b, z = inv_diag.cwiseProduct(r), p = z, q(b.size());
        double rz = r.dot(z);
        std::vector<double> alphas, betas;
        long it = 0;
        double rel = 1.0;
        while (it < cap) {
            q.noalias() = Ks * p;
            const double alpha = rz / p.dot(q);
            x += alpha * p;
            r -= alpha * q;
            ++it;
            alphas.push_back(alpha);
            rel = r.norm() / bnorm;
            if (rel <= tol) break;
            z = inv_diag.cwiseProduct(r);
            const double rz_new = r.dot(z);
            const double beta = rz_new / rz;
            betas.push_back(beta);
            rz = rz_new;
            p = z + beta * p;
        }
        if (rel > tol) {
            std::ostringstream msg;
            msg << "conjugate gradient did not converge in " << cap << " iterations (relative residual " << rel
                << ", condition estimate " << condition_from_lanczos(alphas, betas) << ")";
            throw std::runtime_error(msg.str());
        }
        res.X.col(c) = x;
        res.iterations += static_cast<int>(it);
        res.residual = std::max(res.residual, rel);
    }
    return res;
}

SolveResult solve_cholesky(const SpMat& K, const Eigen::Matrix<double, Eigen::Dynamic, 4>& rhs) {
    Eigen::CholmodDecomposition<SpMat, Eigen::Lower> chol;
    chol.setMode(Eigen::CholmodSimplicialLLt);
    chol.compute(K);
    if (chol.info() != Eigen::Success) throw std::runtime_error("sparse Cholesky factorization failed (matrix not positive definite)");
    SolveResult res;
    const Eigen::MatrixXd b = rhs;
    res.X = Eigen::MatrixXd(chol.solve(b));
    if (chol.info() != Eigen::Success) throw std::runtime_error("sparse Cholesky solve failed");
    const auto Ks = K.selfadjointView<Eigen::Lower>();
    for (long c = 0; c < rhs.cols(); ++c) {
        const double bnorm = rhs.col(c).norm();
        if (bnorm == 0.0) continue;
        const Eigen::VectorXd r = Ks * res.X.col(c) - rhs.col(c);
        res.residual = std::max(res.residual, r.norm() / bnorm);
    }
    return res;
}

SolveResult solve(const System& sys, const Cube& cube, const CellOptions& opt) {
    if (!(opt.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    if (opt.solver == CellSolver::ConjugateGradient) {
        const long cap = std::max<long>(1, static_cast<long>(std::ceil(opt.cg_cap_factor * static_cast<double>(cube.cells))));
        return solve_cg(sys.K, sys.rhs, opt.tol, cap);
    }
    SolveResult res = solve_cholesky(sys.K, sys.rhs);
    if (res.residual > opt.tol) {
        std::ostringstream msg;
        msg << "Cholesky solve residual " << res.residual << " exceeds tolerance " << opt.tol << " (ill-conditioned cell problem)";
        throw std::runtime_error(msg.str());
    }
    return res;
}

// Local 4-vectors (B x + e) per basis direction for one triangle.
Eigen::Matrix4d local_fields(const Eigen::Matrix<double, 4, 6>& B, const std::array<long, 6>& d,
                             const Eigen::Matrix<double, Eigen::Dynamic, 4>& X, const Eigen::Matrix4d& P) {
    Eigen::Matrix<double, 6, 4> xl = Eigen::Matrix<double, 6, 4>::Zero();
    for (int a = 0; a < 6; ++a)
        if (d[a] >= 0) xl.row(a) = X.row(d[a]);
    return B * xl + P;
}

}  // namespace

CellBoundary parse_cell_boundary(const std::string& s) {
    if (s == "dirichlet") return CellBoundary::Dirichlet;
    if (s == "periodic") return CellBoundary::Periodic;
    throw std::invalid_argument("unknown cell boundary '" + s + "' (expected dirichlet|periodic)");
}

CellSolver parse_cell_solver(const std::string& s) {
    if (s == "cholesky") return CellSolver::Cholesky;
    if (s == "cg") return CellSolver::ConjugateGradient;
    throw std::invalid_argument("unknown cell solver '" + s + "' (expected cholesky|cg)");
}

std::string to_string(CellBoundary b) { return b == CellBoundary::Dirichlet ? "dirichlet" : "periodic"; }
std::string to_string(CellSolver s) { return s == CellSolver::Cholesky ? "cholesky" : "cg"; }

Cube triadic_cube(int m, double cells_per_unit, double cx, double cy) {
    Cube c;
    c.center[0] = cx;
    c.center[1] = cy;
    c.side = std::pow(3.0, m);
    c.cells = static_cast<std::size_t>(std::llround(c.side * cells_per_unit));
    if (std::fabs(static_cast<double>(c.cells) - c.side * cells_per_unit) > 1e-9 * c.side * cells_per_unit)
        throw std::invalid_argument("cube side times cells_per_unit must be an integer");
    return c;
}

CoarseMatrices coarse_A(const StreamSource& field, double nu, const Cube& cube, const CellOptions& opt) {
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    const Mesh mesh = build_mesh(cube, opt.boundary);
    std::vector<double> k12 = sample_centroids(field, mesh);
    const System sys = assemble(mesh, k12, nu);
    const SolveResult sol = solve(sys, cube, opt);

    CoarseMatrices cm;
    cm.cube = cube;
    cm.residual = sol.residual;
    cm.iterations = sol.iterations;
    const double w = 1.0 / static_cast<double>(k12.size());
    Eigen::Matrix<double, 4, 6> B[2] = {local_B(kShapes[0], mesh.h), local_B(kShapes[1], mesh.h)};
    const Eigen::Matrix4d I4 = Eigen::Matrix4d::Identity();
    for_each_triangle(mesh, [&](std::size_t tri, int t, std::size_t, std::size_t, const std::array<long, 6>& d) {
        const Eigen::Matrix4d A = local_bigA(nu, k12[tri]);
        const Eigen::Matrix4d Y = local_fields(B[t], d, sol.X, I4);
        cm.A.noalias() += w * (Y.transpose() * A * Y);
        cm.arithmetic_bound += w * (nu + k12[tri] * k12[tri] / nu);
        cm.mean_k12 += w * k12[tri];
    });
    cm.A = 0.5 * (cm.A + cm.A.transpose()).eval();
    const SKS e = extract_s_sstar_k(cm.A);
    cm.s = e.s;
    cm.sstar = e.sstar;
    cm.k = e.k;
    if (opt.keep_minimizers) {
        auto mz = std::make_shared<CellMinimizers>();
        mz->cube = cube;
        mz->boundary = opt.boundary;
        mz->nu = nu;
        mz->k12 = std::move(k12);
        for (int c = 0; c < 4; ++c) mz->solutions.push_back(sol.X.col(c));
        mz->dof_of_node = mesh.dof;
        mz->phi_dofs = mesh.nphi;
        cm.minimizers = std::move(mz);
    }
    return cm;
}

double minimize_quadratic(const StreamSource& field, double nu, const Cube& cube, const Eigen::Vector4d& P,
                          const CellOptions& opt) {
    const Mesh mesh = build_mesh(cube, opt.boundary);
    const std::vector<double> k12 = sample_centroids(field, mesh);
    System sys = assemble(mesh, k12, nu);
    // Single right-hand side for P; the other columns are zero.
    Eigen::VectorXd r = sys.rhs * P;
    sys.rhs.setZero();
    sys.rhs.col(0) = r;
    const SolveResult sol = solve(sys, cube, opt);
    const double w = 1.0 / static_cast<double>(k12.size());
    Eigen::Matrix<double, 4, 6> B[2] = {local_B(kShapes[0], mesh.h), local_B(kShapes[1], mesh.h)};
    Eigen::Matrix4d Pm = Eigen::Matrix4d::Zero();
    Pm.col(0) = P;
    double value = 0.0;
    for_each_triangle(mesh, [&](std::size_t tri, int t, std::size_t, std::size_t, const std::array<long, 6>& d) {
        const Eigen::Vector4d y = local_fields(B[t], d, sol.X, Pm).col(0);
        value += w * y.dot(local_bigA(nu, k12[tri]) * y);
    });
    return value;
}

SolutionAverages rep_solution_averages(const CoarseMatrices& cm, const Eigen::Vector2d& e) {
    if (!cm.minimizers) throw std::invalid_argument("coarse matrices were computed without stored minimizers");
    const CellMinimizers& mz = *cm.minimizers;
    const Mesh mesh = build_mesh(mz.cube, mz.boundary);
    // The maximizer v(., U, e) corresponds to P = (0, s_*(U) e).
    const Eigen::Vector2d q = cm.sstar * e;
    Eigen::Vector4d P(0.0, 0.0, q[0], q[1]);
    Eigen::Matrix<double, Eigen::Dynamic, 4> X(mz.solutions.front().size(), 4);
    X.setZero();
    Eigen::VectorXd combo = Eigen::VectorXd::Zero(mz.solutions.front().size());
    for (int c = 0; c < 4; ++c) combo += P[c] * mz.solutions[static_cast<std::size_t>(c)];
    X.col(0) = combo;
    Eigen::Matrix4d Pm = Eigen::Matrix4d::Zero();
    Pm.col(0) = P;
    Eigen::Matrix<double, 4, 6> B[2] = {local_B(kShapes[0], mesh.h), local_B(kShapes[1], mesh.h)};
    SolutionAverages out;
    const double w = 1.0 / static_cast<double>(mz.k12.size());
    const double nu = mz.nu;
    for_each_triangle(mesh, [&](std::size_t tri, int t, std::size_t, std::size_t, const std::array<long, 6>& d) {
        const Eigen::Vector4d y = local_fields(B[t], d, X, Pm).col(0);
        const double b = mz.k12[tri];
        const Eigen::Vector2d u = y.head<2>(), wv = y.tail<2>();
        const Eigen::Vector2d ku(b * u[1], -b * u[0]);
        const Eigen::Vector2d g = (wv - ku) / nu;
        const Eigen::Vector2d grad = u + g;
        // sigma = s u + k g, flux = sigma + w.
        const Eigen::Vector2d kg(b * g[1], -b * g[0]);
        const Eigen::Vector2d flux = nu * u + kg + wv;
        out.grad += w * grad;
        out.flux += w * flux;
        out.energy += w * 0.5 * nu * grad.squaredNorm();
    });
    out.predicted_energy = 0.5 * e.dot(cm.sstar * e);
    return out;
}

}  // namespace sdiff
