#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "superdiff/coarse.hpp"
#include "superdiff/field.hpp"

using namespace sdiff;

namespace {

const StreamField& random_field() {
    static const StreamField f = [] {
        FieldParams p;
        p.L = 2;
        p.K = 4;
        const RadialSpectrum spec(make_bump_profile(ProfileKind::SmoothstepExp, 1.0), 2);
        return StreamField::synthesize(p, spec, 5);
    }();
    return f;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::Matrix2d antisym(double c) {
    Eigen::Matrix2d h;
    h << 0.0, c, -c, 0.0;
    return h;
}

}  // namespace

TEST_CASE("constant field reproduces the pointwise matrix") {
    const double nu = 0.7, b = 1.3;
    const ConstantStream f(2, {b, 0.0, 0.0});
    const CoarseMatrices cm = coarse_A(f, nu, triadic_cube(1, 4.0));
    Eigen::Matrix2d a;
    a << nu, b, -b, nu;
    CHECK(max_abs(cm.A - pointwise_A(a)) < 1e-9);
    CHECK(max_abs(cm.s - nu * Eigen::Matrix2d::Identity()) < 1e-9);
    CHECK(max_abs(cm.sstar - nu * Eigen::Matrix2d::Identity()) < 1e-9);
    CHECK(cm.k(0, 1) == doctest::Approx(b));
    CHECK(cm.k(1, 0) == doctest::Approx(-b));
}

TEST_CASE("periodic layered flow matches the layered homogenization formula") {
    // k12 = sin(2 pi x1 / 9): s11 = nu, s22 = nu + <b^2>/nu = 1.5 for nu = 1.
    const LayeredStream f = LayeredStream::sine(1.0, 9.0);
    CellOptions opt;
    opt.boundary = CellBoundary::Periodic;
    Cube c = triadic_cube(2, 8.0);
    const CoarseMatrices cm = coarse_A(f, 1.0, c, opt);
    CHECK(cm.s(0, 0) == doctest::Approx(1.0).epsilon(0.005));
    CHECK(cm.s(1, 1) == doctest::Approx(1.5).epsilon(0.005));
    CHECK(std::fabs(cm.s(0, 1)) < 1e-8);
    CHECK(cm.arithmetic_bound == doctest::Approx(1.5).epsilon(0.005));
}

TEST_CASE("assemble and extract are inverse") {
    Eigen::Matrix2d s, ss, k;
    s << 2.0, 0.3, 0.3, 1.5;
    ss << 1.2, 0.1, 0.1, 1.1;
    k << 0.2, 0.7, -0.4, 0.1;
    const SKS r = extract_s_sstar_k(assemble_bigA(s, ss, k));
    CHECK(max_abs(r.s - s) < 1e-12);
    CHECK(max_abs(r.sstar - ss) < 1e-12);
    CHECK(max_abs(r.k - k) < 1e-12);
}

TEST_CASE("random field satisfies the structural invariants") {
    const FieldView v(random_field());
    for (double cx : {0.0, 4.5, -13.0}) {
        const CoarseMatrices cm = coarse_A(v, 1.0, triadic_cube(2, 4.0, cx, 2.0 * cx));
        const CoarseInvariants inv = check_invariants(cm, 1.0);
        CHECK(inv.loewner >= -1e-9);
        CHECK(inv.harmonic >= -1e-9);
        CHECK(inv.arithmetic >= -1e-9);
        CHECK(inv.symmetric_k >= -1e-9);
        CHECK(inv.reconstruction < 1e-10);
        CHECK(cm.A.isApprox(cm.A.transpose(), 1e-10));
    }
}

TEST_CASE("solvers agree and match single minimizations") {
    const FieldView v(random_field());
    const Cube c = triadic_cube(2, 4.0);
    const CoarseMatrices chol = coarse_A(v, 1.0, c);
    CellOptions cg;
    cg.solver = CellSolver::ConjugateGradient;
    cg.tol = 1e-11;
    const CoarseMatrices it = coarse_A(v, 1.0, c, cg);
    CHECK(it.iterations > 0);
    CHECK(max_abs(chol.A - it.A) < 1e-7 * max_abs(chol.A));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int t = 0; t < 4; ++t) {
        Eigen::Vector4d P(g(rng), g(rng), g(rng), g(rng));
        CHECK(minimize_quadratic(v, 1.0, c, P) == doctest::Approx(P.dot(chol.A * P)).epsilon(1e-9));
    }
}

TEST_CASE("J is nonnegative and follows its matrix formula") {
    const FieldView v(random_field());
    const CoarseMatrices cm = coarse_A(v, 1.0, triadic_cube(2, 4.0));
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (int t = 0; t < 20; ++t) {
        const Eigen::Vector2d p(g(rng), g(rng)), q(g(rng), g(rng));
        Eigen::Vector4d X;
        X << -p, q;
        CHECK(J_value(cm, p, q) == doctest::Approx(0.5 * X.dot(cm.A * X) - p.dot(q)));
        CHECK(J_value(cm, p, q) >= -1e-10);
    }
}

TEST_CASE("maximizer averages and energy identity") {
    const FieldView v(random_field());
    CellOptions opt;
    opt.keep_minimizers = true;
    const CoarseMatrices cm = coarse_A(v, 1.0, triadic_cube(2, 4.0), opt);
    REQUIRE(cm.minimizers);
    for (const Eigen::Vector2d e : {Eigen::Vector2d(1, 0), Eigen::Vector2d(0.6, -0.8)}) {
        const SolutionAverages s = rep_solution_averages(cm, e);
        CHECK((s.grad - e).norm() < 1e-9);
        CHECK(s.energy == doctest::Approx(s.predicted_energy).epsilon(1e-8));
    }
    CHECK_THROWS(rep_solution_averages(coarse_A(v, 1.0, triadic_cube(1, 4.0)), Eigen::Vector2d(1, 0)));
}

TEST_CASE("subadditivity over a triadic partition") {
    const FieldView v(random_field());
    const Cube parent = triadic_cube(2, 4.0);
    const CoarseMatrices pa = coarse_A(v, 1.0, parent);
    std::vector<CoarseMatrices> kids;
    const auto cubes = partition_cube(parent, 3);
    CHECK(cubes.size() == 9);
    for (const auto& c : cubes) {
        CHECK(c.cells * 3 == parent.cells);
        kids.push_back(coarse_A(v, 1.0, c));
    }
    CHECK(subadditivity_report(pa, kids) >= -1e-9);
}

TEST_CASE("constant shift of k conjugates A") {
    const FieldView v(random_field());
    const Cube c = triadic_cube(1, 8.0, 2.0, -1.0);
    const double h = 0.8;
    const ShiftedStream shifted(v, {h, 0.0, 0.0});
    const CoarseMatrices a0 = coarse_A(v, 1.0, c);
    const CoarseMatrices a1 = coarse_A(shifted, 1.0, c);
    const Eigen::MatrixXd G = shift_matrix(antisym(h));
    CHECK(max_abs(a0.A - G.transpose() * a1.A * G) < 1e-8 * max_abs(a1.A));
    CHECK(max_abs(a1.s - a0.s) < 1e-8);
    CHECK(max_abs(a1.k - a0.k - antisym(h)) < 1e-8);
}

TEST_CASE("invalid cubes and fields are rejected") {
    const ConstantStream f(2, {0.0, 0.0, 0.0});
    Cube c;
    c.cells = 0;
    CHECK_THROWS_AS(coarse_A(f, 1.0, c), std::invalid_argument);
    c.cells = 4;
    c.side = 0.0;
    CHECK_THROWS_AS(coarse_A(f, 1.0, c), std::invalid_argument);
    CHECK_THROWS_AS(coarse_A(f, 0.0, triadic_cube(1, 4.0)), std::invalid_argument);
    const ConstantStream f3(3, {0.0, 0.0, 0.0});
    CHECK_THROWS_AS(coarse_A(f3, 1.0, triadic_cube(1, 4.0)), std::invalid_argument);
    CHECK_THROWS(parse_cell_boundary("dirichlett"));
    CHECK(parse_cell_solver(to_string(CellSolver::ConjugateGradient)) == CellSolver::ConjugateGradient);
}

TEST_CASE("mesh refinement changes s by less than two percent") {
    const FieldView v(random_field());
    const CoarseMatrices coarse = coarse_A(v, 1.0, triadic_cube(2, 4.0));
    const CoarseMatrices fine = coarse_A(v, 1.0, triadic_cube(2, 8.0));
    CHECK(std::fabs(coarse.s.trace() - fine.s.trace()) / fine.s.trace() < 0.02);
}

TEST_CASE("localization error stays within its bound") {
    const StreamField& f = random_field();
    const FieldView full(f), low(f, 0, 1);
    const DifferenceStream diff(full, low);
    const LocalizationReport r = localization_report(low, full, diff, 1.0, triadic_cube(1, 8.0, 3.0, 3.0));
    CHECK(r.grad_sup > 0.0);
    CHECK(r.error <= r.bound);
}

TEST_CASE("shom estimate pools per-sample traces") {
    const StreamField& f = random_field();
    const FieldView a(f);
    const ShiftedStream b(a, {0.0, 0.0, 0.0}, -1.0);
    const std::vector<const StreamSource*> src = {&a, &b};
    const ShomEstimate e = shom_estimate(src, 1.0, 1, triadic_cube(1, 4.0));
    REQUIRE(e.per_sample_s.size() == 2);
    // The transposed field a^T has the same symmetric part s(U).
    CHECK(e.per_sample_s[0] == doctest::Approx(e.per_sample_s[1]).epsilon(1e-9));
    CHECK(e.sbar == doctest::Approx(e.per_sample_s[0]));
    CHECK(e.sbar >= e.sstar_bar - 1e-12);
}
