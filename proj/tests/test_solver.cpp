#include <doctest.h>

#include "mpcqp/bruteforce.hpp"
#include "mpcqp/rng.hpp"
#include "mpcqp/solver.hpp"
#include "oracles.hpp"

using namespace mpcqp;

TEST_SUITE_BEGIN("solver");

namespace {

// scalar single-stage helper: min 1/2 r u^2 + lin*u (+ trivial state row)
GeneralizedQp scalar_problem(double lin, double lo, double hi) {
  MpcProblem p;
  p.model.A = {Matrix::Identity(1)};
  Matrix b(1, 1);
  b(0, 0) = 1.0;
  p.model.B = {b};
  p.model.w = {Vector(1, 0.0)};
  p.costs.Q = {Matrix(1, 1), Matrix(1, 1)};
  p.costs.R = {Matrix::Identity(1)};
  p.costs.S = {Matrix(1, 1)};
  p.costs.q = {Vector(1, 0.0), Vector(1, 0.0)};
  p.costs.r = {Vector(1, lin)};
  p.u_lower = {Vector(1, lo)};
  p.u_upper = {Vector(1, hi)};
  p.x0 = Vector(1, 0.0);
  const SparseQp qp = assemble_sparse_qp(p);
  return build_generalized_qp(qp, partial_prediction(qp, condensing_identity(1), blocking_identity(1)));
}

struct RandomInstance {
  MpcProblem problem;
  GeneralizedQp gqp;
  Transform tf;
  SparseQp qp;
};

RandomInstance random_instance(Rng& rng, int max_stages = 6, int max_bound_constraints = 14) {
  for (;;) {
    const int n_stages = 2 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(max_stages - 1));
    const int nx = 1 + static_cast<int>(rng.next_u64() % 3);
    const int nu = 1 + static_cast<int>(rng.next_u64() % 2);
    oracles::ProblemOptions opt;
    opt.bounded_channels = 1 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(nu));
    RandomInstance inst;
    inst.problem = oracles::random_problem(rng, n_stages, nx, nu, opt);
    inst.qp = assemble_sparse_qp(inst.problem);
    const auto win = blocking_vector(oracles::random_window_sizes(rng, n_stages), n_stages);
    const int mode = static_cast<int>(rng.next_u64() % 3);
    const auto cond = mode == 0 ? condensing_identity(n_stages)
                    : mode == 1 ? condensing_dense(n_stages)
                                : condensing_vector(oracles::random_window_sizes(rng, n_stages), n_stages);
    inst.tf = partial_prediction(inst.qp, cond, win);
    inst.gqp = build_generalized_qp(inst.qp, inst.tf);
    int bound_count = 0;
    for (double v : inst.gqp.u_lower)
      if (finite_bound(v)) ++bound_count;
    for (double v : inst.gqp.u_upper)
      if (finite_bound(v)) ++bound_count;
    if (bound_count <= max_bound_constraints) return inst;
  }
}

}  // namespace

TEST_CASE("unconstrained scalar minimizer") {
  const GeneralizedQp g = scalar_problem(-1.0, -kInfinityBound, kInfinityBound);
  auto [sol, rep] = solve_box_qp(g);
  REQUIRE(sol.status == SolveStatus::Converged);
  CHECK(sol.u[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.z_lower[0] == 0.0);
  CHECK(sol.z_upper[0] == 0.0);
}

TEST_CASE("clipped scalar minimizer activates the upper bound") {
  const GeneralizedQp g = scalar_problem(-10.0, -kInfinityBound, 0.5);
  auto [sol, rep] = solve_box_qp(g);
  REQUIRE(sol.status == SolveStatus::Converged);
  CHECK(sol.u[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(0.5 * 0.25 - 5.0).epsilon(1e-7));
  CHECK(sol.z_upper[0] > 1.0);  // active with a positive multiplier
}

TEST_CASE("crossed bounds are reported, not solved") {
  GeneralizedQp g = scalar_problem(-1.0, -1.0, 1.0);
  std::swap(g.u_lower, g.u_upper);
  auto [sol, rep] = solve_box_qp(g);
  CHECK(sol.status == SolveStatus::InfeasibleBounds);
  CHECK(solve_box_qp_bruteforce(g).status == SolveStatus::InfeasibleBounds);
}

TEST_CASE("indefinite cost is rejected before iterating") {
  GeneralizedQp g = scalar_problem(-1.0, -1.0, 1.0);
  Matrix neg(1, 1);
  neg(0, 0) = -1.0;
  g.R.set(0, 0, neg);
  CHECK_THROWS_AS(solve_box_qp(g), std::invalid_argument);
}

TEST_CASE("brute force reproduces the unconstrained solve at sentinel bounds") {
  const GeneralizedQp g = scalar_problem(-1.0, -kInfinityBound, kInfinityBound);
  const Solution sol = solve_box_qp_bruteforce(g);
  CHECK(sol.status == SolveStatus::Converged);
  CHECK(sol.u[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("brute force clips the scalar problem") {
  const Solution sol = solve_box_qp_bruteforce(scalar_problem(-10.0, -kInfinityBound, 0.5));
  CHECK(sol.u[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sol.z_upper[0] == doctest::Approx(9.5).epsilon(1e-9));
}

TEST_CASE("brute force refuses oversized enumerations") {
  Rng rng(61);
  const MpcProblem p = oracles::random_problem(rng, 8, 2, 2);  // 32 bound constraints
  const SparseQp qp = assemble_sparse_qp(p);
  const GeneralizedQp g =
      build_generalized_qp(qp, partial_prediction(qp, condensing_identity(8), blocking_identity(8)));
  CHECK_THROWS_WITH_AS(solve_box_qp_bruteforce(g), doctest::Contains("14"), std::invalid_argument);
}

TEST_CASE("interior point matches brute force on random transformed instances") {
  Rng rng(62);
  int actives = 0;
  SolverSettings tight;  // drive residuals well below the 1e-6 primal comparison
  tight.kkt_tol = 1e-10;
  tight.comp_tol = 1e-10;
  for (int trial = 0; trial < 60; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const Solution bf = solve_box_qp_bruteforce(inst.gqp);
    auto [ip, rep] = solve_box_qp(inst.gqp, tight);
    REQUIRE(ip.status == SolveStatus::Converged);
    for (size_t i = 0; i < ip.u.size(); ++i) CHECK(std::abs(ip.u[i] - bf.u[i]) < 1e-6);
    CHECK(std::abs(ip.objective - bf.objective) <= 1e-8 * (1.0 + std::abs(bf.objective)));
    for (size_t i = 0; i < ip.u.size(); ++i)
      if (finite_bound(inst.gqp.u_lower[i]) &&
          (bf.z_lower[i] > 1e-6 || bf.z_upper[i] > 1e-6))
        ++actives;
  }
  CHECK(actives > 0);  // the comparison exercised active bounds, not only interior optima
}

TEST_CASE("converged solutions satisfy the residual contract") {
  Rng rng(63);
  SolverSettings settings;
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = random_instance(rng);
    auto [sol, rep] = solve_box_qp(inst.gqp, settings);
    REQUIRE(sol.status == SolveStatus::Converged);
    const KktResiduals res = kkt_residuals(inst.gqp, sol);
    CHECK(res.stationarity <= settings.kkt_tol);
    CHECK(res.primal_eq <= settings.kkt_tol);
    CHECK(res.primal_bound <= settings.kkt_tol);
    CHECK(res.complementarity <= settings.comp_tol);
  }
}

TEST_CASE("residuals vanish at the clipped analytic solution") {
  const GeneralizedQp g = scalar_problem(-10.0, -kInfinityBound, 0.5);
  Solution sol;
  sol.u = {0.5};
  sol.x = {0.5};
  sol.lam = {0.0};
  sol.z_lower = {0.0};
  sol.z_upper = {9.5};
  const KktResiduals res = kkt_residuals(g, sol);
  CHECK(res.stationarity <= 1e-12);
  CHECK(res.primal_eq <= 1e-12);
  CHECK(res.primal_bound <= 1e-12);
  CHECK(res.complementarity <= 1e-12);
}

TEST_CASE("stationarity residual grows proportionally under perturbation") {
  const GeneralizedQp g = scalar_problem(-10.0, -kInfinityBound, 0.5);
  Solution sol;
  sol.u = {0.5 - 1e-3};
  sol.x = {0.5};
  sol.lam = {0.0};
  sol.z_lower = {0.0};
  sol.z_upper = {9.5};
  const KktResiduals res = kkt_residuals(g, sol);
  // d(stationarity)/du is the Hessian row; here |H| = 1
  CHECK(res.stationarity >= 1e-3 / 10.0);
  CHECK(res.stationarity <= 1e-3 * 10.0);
}

TEST_CASE("repeated solves are bitwise deterministic") {
  Rng rng(64);
  const RandomInstance inst = random_instance(rng);
  auto [s1, r1] = solve_box_qp(inst.gqp);
  auto [s2, r2] = solve_box_qp(inst.gqp);
  CHECK(r1.iterations == r2.iterations);
  CHECK(r1.solve_flops == r2.solve_flops);
  CHECK(r1.prep_flops == r2.prep_flops);
  CHECK(r1.nnz_kkt == r2.nnz_kkt);
  CHECK(r1.factor_fill == r2.factor_fill);
  CHECK(std::memcmp(s1.u.data(), s2.u.data(), s1.u.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(s1.x.data(), s2.x.data(), s1.x.size() * sizeof(double)) == 0);
}

TEST_CASE("barrier parameter is non-increasing across accepted iterates") {
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = random_instance(rng);
    auto [sol, rep] = solve_box_qp(inst.gqp);
    REQUIRE(sol.status == SolveStatus::Converged);
    for (size_t k = 1; k < rep.mu_trace.size(); ++k)
      CHECK(rep.mu_trace[k] <= rep.mu_trace[k - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("factor fill never exceeds the symbolic band prediction") {
  Rng rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    const int n_stages = 3 + static_cast<int>(rng.next_u64() % 6);
    const MpcProblem p = oracles::random_problem(rng, n_stages, 3, 2);
    const SparseQp qp = assemble_sparse_qp(p);
    const GeneralizedQp g = build_generalized_qp(
        qp, partial_prediction(qp, condensing_identity(n_stages), blocking_identity(n_stages)));
    KktAssembler assembler(g);
    const auto& prof = assembler.profile();
    int bandwidth = 0;
    for (int i = 0; i < prof.n; ++i) bandwidth = std::max(bandwidth, i - prof.fcol[i]);
    std::uint64_t band_fill = 0;
    for (int i = 0; i < prof.n; ++i) band_fill += static_cast<std::uint64_t>(std::min(i, bandwidth)) + 1;
    auto [sol, rep] = solve_box_qp(g);
    CHECK(rep.factor_fill <= band_fill);
    CHECK(rep.factor_fill == prof.fill());
  }
}

TEST_CASE("interleaved kkt solve agrees with a dense reference") {
  Rng rng(67);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const GeneralizedQp& g = inst.gqp;
    const int nu_t = g.n_inputs(), nx_t = g.n_states();
    KktAssembler assembler(g);
    Vector d(nu_t);
    for (auto& v : d) v = rng.uniform(0.1, 2.0);
    FlopCount fc;
    assembler.fill_values(d, 0.0, &fc);
    const auto info = profile_ldlt_factor(assembler.profile(), assembler.layout().dual, &fc);
    (void)info;
    // dense reference via Eigen
    const int dim = nu_t + 2 * nx_t;
    Eigen::MatrixXd kd = Eigen::MatrixXd::Zero(dim, dim);
    kd.topLeftCorner(nu_t, nu_t) = oracles::to_eigen(g.R);
    for (int i = 0; i < nu_t; ++i) kd(i, i) += d[i];
    if (nx_t > 0) {
      kd.block(nu_t, nu_t, nx_t, nx_t) = oracles::to_eigen(g.Q);
      kd.block(nu_t, 0, nx_t, nu_t) = oracles::to_eigen(g.S);
      kd.block(0, nu_t, nu_t, nx_t) = oracles::to_eigen(g.S).transpose();
      kd.block(nu_t + nx_t, 0, nx_t, nu_t) = -oracles::to_eigen(g.B);
      kd.block(0, nu_t + nx_t, nu_t, nx_t) = -oracles::to_eigen(g.B).transpose();
      kd.block(nu_t + nx_t, nu_t, nx_t, nx_t) = oracles::to_eigen(g.A);
      kd.block(nu_t, nu_t + nx_t, nx_t, nx_t) = oracles::to_eigen(g.A).transpose();
    }
    Eigen::VectorXd rhs(dim);
    for (int i = 0; i < dim; ++i) rhs(i) = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd xref = kd.fullPivLu().solve(rhs);
    // profile solve in the interleaved order
    const KktLayout& lay = assembler.layout();
    Vector b(lay.dim, 0.0);
    for (int w = 0; w < g.win.count(); ++w)
      for (int i = 0; i < g.nu; ++i) b[lay.u_pos[w] + i] = rhs(w * g.nu + i);
    for (int l = 0; l < g.cond.count(); ++l)
      for (int i = 0; i < g.nx; ++i) {
        b[lay.x_pos[l] + i] = rhs(nu_t + l * g.nx + i);
        b[lay.l_pos[l] + i] = rhs(nu_t + nx_t + l * g.nx + i);
      }
    profile_ldlt_solve(assembler.profile(), b, &fc);
    for (int w = 0; w < g.win.count(); ++w)
      for (int i = 0; i < g.nu; ++i)
        CHECK(b[lay.u_pos[w] + i] == doctest::Approx(xref(w * g.nu + i)).epsilon(1e-6));
    for (int l = 0; l < g.cond.count(); ++l)
      for (int i = 0; i < g.nx; ++i) {
        CHECK(b[lay.x_pos[l] + i] == doctest::Approx(xref(nu_t + l * g.nx + i)).epsilon(1e-6));
        CHECK(b[lay.l_pos[l] + i] == doctest::Approx(xref(nu_t + nx_t + l * g.nx + i)).epsilon(1e-6));
      }
  }
}

TEST_CASE("blocking restricts the feasible set and cannot improve the optimum") {
  Rng rng(68);
  for (int trial = 0; trial < 15; ++trial) {
    const int n_stages = 4 + static_cast<int>(rng.next_u64() % 5);
    const MpcProblem p = oracles::random_problem(rng, n_stages, 2, 1);
    const SparseQp qp = assemble_sparse_qp(p);
    auto m = oracles::random_window_sizes(rng, n_stages);
    if (static_cast<int>(m.size()) == n_stages) m = {2, n_stages - 2 > 0 ? n_stages - 2 : 1};
    const auto win = blocking_vector(m, n_stages);
    const GeneralizedQp blocked =
        build_generalized_qp(qp, partial_prediction(qp, condensing_identity(n_stages), win));
    const GeneralizedQp unblocked = build_generalized_qp(
        qp, partial_prediction(qp, condensing_identity(n_stages), blocking_identity(n_stages)));
    auto [sb, rb] = solve_box_qp(blocked);
    auto [su, ru] = solve_box_qp(unblocked);
    REQUIRE(sb.status == SolveStatus::Converged);
    REQUIRE(su.status == SolveStatus::Converged);
    CHECK(sb.objective >= su.objective - 1e-9);
  }
}

TEST_CASE("eight-stage identity transform matches brute force with one-sided bounds") {
  Rng rng(69);
  SolverSettings tight;
  tight.kkt_tol = 1e-10;
  tight.comp_tol = 1e-10;
  for (int trial = 0; trial < 5; ++trial) {
    oracles::ProblemOptions opt;
    opt.bound_halfwidth = -1.0;  // start unbounded, then add 8 lower bounds
    MpcProblem p = oracles::random_problem(rng, 8, 3, 2, opt);
    for (int k = 0; k < 8; ++k) p.u_lower[k][0] = -0.4;
    const SparseQp qp = assemble_sparse_qp(p);
    const GeneralizedQp g =
        build_generalized_qp(qp, partial_prediction(qp, condensing_identity(8), blocking_identity(8)));
    const Solution bf = solve_box_qp_bruteforce(g);
    auto [ip, rep] = solve_box_qp(g, tight);
    REQUIRE(ip.status == SolveStatus::Converged);
    for (size_t i = 0; i < ip.u.size(); ++i) CHECK(std::abs(ip.u[i] - bf.u[i]) < 1e-6);
    CHECK(std::abs(ip.objective - bf.objective) <= 1e-8 * (1.0 + std::abs(bf.objective)));
  }
}

TEST_SUITE_END();
