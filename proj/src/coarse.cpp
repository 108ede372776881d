#include "superdiff/coarse.hpp"

#include <cmath>
#include <stdexcept>

#include "superdiff/parallel.hpp"

namespace sdiff {
namespace {

double min_eig(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0) throw std::runtime_error("matrix is not positive definite");
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

bool same_mesh_spacing(const Cube& a, const Cube& b) {
    return std::fabs(a.spacing() - b.spacing()) <= 1e-12 * std::max(a.spacing(), b.spacing());
}

}  // namespace

Eigen::MatrixXd pointwise_A(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("coefficient matrix must be square");
    const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
    const Eigen::MatrixXd k = 0.5 * (a - a.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success || min_eig(s) <= 0.0)
        throw std::invalid_argument("symmetric part of the coefficient is not positive definite");
    return assemble_bigA(s, s, k);
}

Eigen::MatrixXd assemble_bigA(const Eigen::MatrixXd& s, const Eigen::MatrixXd& sstar, const Eigen::MatrixXd& k) {
    const long d = s.rows();
    const Eigen::MatrixXd si = sstar.inverse();
    Eigen::MatrixXd A(2 * d, 2 * d);
    A.topLeftCorner(d, d) = s + k.transpose() * si * k;
    A.topRightCorner(d, d) = -k.transpose() * si;
    A.bottomLeftCorner(d, d) = -si * k;
    A.bottomRightCorner(d, d) = si;
    return A;
}

SKS extract_s_sstar_k(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols() || A.rows() % 2 != 0) throw std::invalid_argument("A must be a 2d x 2d matrix");
    const long d = A.rows() / 2;
    const Eigen::MatrixXd lr = A.bottomRightCorner(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (lr + lr.transpose()));
    if (llt.info() != Eigen::Success) throw std::invalid_argument("lower-right block of A is not invertible");
    SKS out;
    out.sstar = llt.solve(Eigen::MatrixXd::Identity(d, d));
    out.sstar = 0.5 * (out.sstar + out.sstar.transpose()).eval();
    out.k = -out.sstar * A.bottomLeftCorner(d, d);
    out.s = A.topLeftCorner(d, d) - out.k.transpose() * lr * out.k;
    out.s = 0.5 * (out.s + out.s.transpose()).eval();
    return out;
}

Eigen::MatrixXd shift_matrix(const Eigen::MatrixXd& h) {
    const long d = h.rows();
    Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2 * d, 2 * d);
    G.bottomLeftCorner(d, d) = h;
    return G;
}

double J_value(const CoarseMatrices& cm, const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
    Eigen::Vector4d P;
    P << -p, q;
    return 0.5 * P.dot(cm.A * P) - p.dot(q);
}

CoarseInvariants check_invariants(const CoarseMatrices& cm, double nu) {
    CoarseInvariants inv;
    inv.loewner = min_eig(cm.s - cm.sstar);
    inv.harmonic = min_eig(cm.sstar - nu * Eigen::Matrix2d::Identity());
    inv.arithmetic = min_eig(cm.arithmetic_bound * Eigen::Matrix2d::Identity() - cm.s);
    const Eigen::Matrix2d gap = cm.s - cm.sstar;
    const Eigen::Matrix2d sym = cm.k + cm.k.transpose();
    inv.symmetric_k = std::min(min_eig(gap - sym), min_eig(gap + sym));
    const Eigen::MatrixXd R = assemble_bigA(cm.s, cm.sstar, cm.k);
    inv.reconstruction = (R - cm.A).norm() / cm.A.norm();
    return inv;
}

std::vector<Cube> partition_cube(const Cube& parent, std::size_t per_side) {
    if (per_side == 0 || parent.cells % per_side != 0)
        throw std::invalid_argument("subcubes do not align with the parent mesh");
    const std::size_t sub = parent.cells / per_side;
    if (sub < 3) throw std::invalid_argument("degenerate subcube: fewer than 3 cells per side");
    const double side = parent.side / static_cast<double>(per_side);
    std::vector<Cube> out;
    for (std::size_t j = 0; j < per_side; ++j) {
        for (std::size_t i = 0; i < per_side; ++i) {
            Cube c;
            c.side = side;
            c.cells = sub;
            c.center[0] = parent.center[0] - 0.5 * parent.side + (static_cast<double>(i) + 0.5) * side;
            c.center[1] = parent.center[1] - 0.5 * parent.side + (static_cast<double>(j) + 0.5) * side;
            out.push_back(c);
        }
    }
    return out;
}

CoarseField coarse_field(const StreamSource& field, double nu, const Cube& parent, int n, const CellOptions& options) {
    const double ratio = parent.side / std::pow(3.0, n);
    const auto per_side = static_cast<std::size_t>(std::llround(ratio));
    if (per_side == 0 || std::fabs(ratio - static_cast<double>(per_side)) > 1e-9 * ratio)
        throw std::invalid_argument("parent cube is not partitioned by subcubes of side 3^n");
    CoarseField cf;
    cf.n = n;
    cf.parent = parent;
    cf.per_side = per_side;
    const std::vector<Cube> subs = partition_cube(parent, per_side);
    cf.cells.resize(subs.size());
    parallel_for(subs.size(), [&](std::size_t i) { cf.cells[i] = coarse_A(field, nu, subs[i], options); });
    for (const auto& c : cf.cells) cf.values.push_back(c.sstar - c.k.transpose());
    return cf;
}

double subadditivity_report(const CoarseMatrices& parent, const std::vector<CoarseMatrices>& children) {
    if (children.empty()) throw std::invalid_argument("no child cubes supplied");
    double area = 0.0;
    Eigen::Matrix4d avg = Eigen::Matrix4d::Zero();
    const double x0 = parent.cube.center[0] - 0.5 * parent.cube.side, x1 = x0 + parent.cube.side;
    const double y0 = parent.cube.center[1] - 0.5 * parent.cube.side, y1 = y0 + parent.cube.side;
    const double eps = 1e-9 * parent.cube.side;
    for (const auto& c : children) {
        const double a = c.cube.side * c.cube.side;
        const double cx0 = c.cube.center[0] - 0.5 * c.cube.side, cy0 = c.cube.center[1] - 0.5 * c.cube.side;
        if (cx0 < x0 - eps || cy0 < y0 - eps || cx0 + c.cube.side > x1 + eps || cy0 + c.cube.side > y1 + eps)
            throw std::invalid_argument("child cube lies outside the parent");
        if (!same_mesh_spacing(c.cube, parent.cube)) throw std::invalid_argument("child mesh does not nest in the parent mesh");
        area += a;
        avg += a * c.A;
    }
    if (std::fabs(area - parent.cube.side * parent.cube.side) > 1e-9 * area)
        throw std::invalid_argument("children do not partition the parent cube");
    avg /= area;
    return min_eig(avg - parent.A);
}

LocalizationReport localization_report(const StreamSource& field_m, const StreamSource& field_L,
                                       const StreamSource& difference, double nu, const Cube& cube,
                                       const CellOptions& options) {
    const CoarseMatrices Am = coarse_A(field_m, nu, cube, options);
    const CoarseMatrices AL = coarse_A(field_L, nu, cube, options);
    LocalizationReport rep;
    const double h12 = AL.mean_k12 - Am.mean_k12;
    rep.shift << 0.0, h12, -h12, 0.0;
    const Eigen::MatrixXd G = shift_matrix(rep.shift);
    const Eigen::MatrixXd Ri = inverse_sqrt(Am.A);
    const Eigen::MatrixXd E = Ri * G.transpose() * AL.A * G * Ri - Eigen::MatrixXd::Identity(4, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (E + E.transpose()), Eigen::EigenvaluesOnly);
    rep.error = es.eigenvalues().cwiseAbs().maxCoeff();
    // sup |grad (k_L - k_m)| over the closed cube on a grid twice as fine as the mesh.
    const std::size_t n = 2 * cube.cells;
    const double step = cube.side / static_cast<double>(n);
    const double x0 = cube.center[0] - 0.5 * cube.side, y0 = cube.center[1] - 0.5 * cube.side;
    double sup = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        for (std::size_t i = 0; i <= n; ++i) {
            const double x[3] = {x0 + static_cast<double>(i) * step, y0 + static_cast<double>(j) * step, 0.0};
            StreamSample s;
            difference.sample(x, 1, s);
            const double g2 = s.comp[0].grad[0] * s.comp[0].grad[0] + s.comp[0].grad[1] * s.comp[0].grad[1];
            sup = std::max(sup, std::sqrt(2.0 * g2));
        }
    }
    rep.grad_sup = sup;
    const double d = 2.0, side = cube.side;
    rep.bound = 2.0 * std::sqrt(d) * side * sup + d * side * side * sup * sup;
    return rep;
}

ShomEstimate shom_estimate(const std::vector<const StreamSource*>& sources, double nu, int m, const Cube& cube,
                           const CellOptions& options, std::uint64_t bootstrap_seed) {
    if (sources.empty()) throw std::invalid_argument("ensemble is empty");
    ShomEstimate est;
    est.m = m;
    est.cells.resize(sources.size());
    parallel_for(sources.size(), [&](std::size_t i) { est.cells[i] = coarse_A(*sources[i], nu, cube, options); });
    Eigen::Matrix2d inv_mean = Eigen::Matrix2d::Zero();
    for (const auto& c : est.cells) {
        est.per_sample_s.push_back(0.5 * c.s.trace());
        est.per_sample_sstar.push_back(0.5 * c.sstar.trace());
        inv_mean += c.sstar.inverse();
    }
    inv_mean /= static_cast<double>(est.cells.size());
    est.sbar = mean(est.per_sample_s);
    est.standard_error = est.cells.size() >= 2 ? standard_error(est.per_sample_s) : 0.0;
    est.sstar_bar = 0.5 * inv_mean.inverse().trace();
    if (est.cells.size() >= 4) est.ci = bootstrap_mean_ci(est.per_sample_s, bootstrap_seed);
    return est;
}

}  // namespace sdiff
