#include <doctest.h>

#include "mpcqp/rng.hpp"
#include "mpcqp/sparse_qp.hpp"
#include "oracles.hpp"

using namespace mpcqp;

TEST_SUITE_BEGIN("sparse_qp");

TEST_CASE("single-stage problem has no coupling blocks") {
  Rng rng(31);
  const MpcProblem p = oracles::random_problem(rng, 1, 2, 1);
  const SparseQp qp = assemble_sparse_qp(p);
  CHECK(qp.A.blocks.size() == 1);
  CHECK(qp.A.at(0, 0).identity);
  CHECK(qp.S.blocks.empty());
  CHECK(bitwise_equal(qp.B.at(0, 0), p.model.B[0]));
  // w = A_0 x0 + w_0
  Vector expect(2, 0.0);
  matvec_accum(p.model.A[0], p.x0.data(), expect.data(), nullptr);
  for (int i = 0; i < 2; ++i) expect[i] += p.model.w[0][i];
  for (int i = 0; i < 2; ++i) CHECK(qp.w[i] == expect[i]);
}

TEST_CASE("six-stage stacked dynamics carry one subdiagonal block per stage") {
  Rng rng(32);
  const MpcProblem p = oracles::random_problem(rng, 6, 10, 5);
  const SparseQp qp = assemble_sparse_qp(p);
  CHECK(qp.A.rows() == 60);
  CHECK(qp.A.cols() == 60);
  int subdiag = 0;
  for (const auto& [key, blk] : qp.A.blocks) {
    if (key.first == key.second) {
      CHECK(blk.identity);
    } else {
      CHECK(key.first == key.second + 1);
      ++subdiag;
      const Matrix expect = negate(p.model.A[key.first]);
      CHECK(bitwise_equal(blk, expect));
    }
  }
  CHECK(subdiag == 5);
  // cross terms sit on the superdiagonal for stages 1..N-1
  CHECK(qp.S.blocks.size() == 5);
  for (int k = 1; k < 6; ++k) {
    REQUIRE(qp.S.has(k - 1, k));
    CHECK(bitwise_equal(qp.S.at(k - 1, k), p.costs.S[k]));
  }
}

TEST_CASE("stage-0 cross term folds into the input linear term") {
  Rng rng(33);
  const MpcProblem p = oracles::random_problem(rng, 3, 2, 2);
  const SparseQp qp = assemble_sparse_qp(p);
  for (int i = 0; i < 2; ++i) {
    double expect = p.costs.r[0][i];
    for (int j = 0; j < 2; ++j) expect += p.costs.S[0](j, i) * p.x0[j];
    CHECK(qp.r[i] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("assembly rejects invalid problems") {
  Rng rng(34);
  MpcProblem p = oracles::random_problem(rng, 3, 2, 1);
  p.u_lower[1][0] = 2.0;
  p.u_upper[1][0] = -2.0;
  CHECK_THROWS_WITH_AS(assemble_sparse_qp(p), doctest::Contains("stage 1"), std::invalid_argument);
}

TEST_CASE("rollout on trivial dynamics") {
  LtvModel m;
  const int n_stages = 4;
  SUBCASE("identity dynamics hold the state") {
    m.A.assign(n_stages, Matrix::Identity(2));
    m.B.assign(n_stages, Matrix(2, 1));
    m.w.assign(n_stages, Vector(2, 0.0));
    const Vector x0 = {1.5, -2.0};
    const Vector traj = rollout(m, x0, Vector(4, 0.7));
    for (int k = 0; k < n_stages; ++k)
      for (int i = 0; i < 2; ++i) CHECK(traj[k * 2 + i] == x0[i]);
  }
  SUBCASE("memoryless dynamics copy the input") {
    m.A.assign(n_stages, Matrix(1, 1));
    Matrix b(1, 1);
    b(0, 0) = 1.0;
    m.B.assign(n_stages, b);
    m.w.assign(n_stages, Vector(1, 0.0));
    const Vector traj = rollout(m, Vector(1, 9.0), Vector(4, 0.25));
    for (int k = 0; k < n_stages; ++k) CHECK(traj[k] == 0.25);
  }
  SUBCASE("scalar geometric recursion") {
    Matrix a(1, 1);
    a(0, 0) = 2.0;
    Matrix b(1, 1);
    b(0, 0) = 1.0;
    m.A.assign(n_stages, a);
    m.B.assign(n_stages, b);
    m.w.assign(n_stages, Vector(1, 0.0));
    const Vector traj = rollout(m, Vector(1, 1.0), Vector(4, 0.0));
    // hand loop oracle
    double x = 1.0;
    for (int k = 0; k < n_stages; ++k) {
      x = 2.0 * x;
      CHECK(traj[k] == x);
    }
  }
}

TEST_CASE("rollout rejects mismatched input length") {
  LtvModel m;
  m.A.assign(2, Matrix::Identity(2));
  m.B.assign(2, Matrix(2, 1));
  m.w.assign(2, Vector(2, 0.0));
  CHECK_THROWS_AS(rollout(m, Vector(2, 0.0), Vector(3, 0.0)), std::invalid_argument);
}

TEST_CASE("rolled-out trajectories satisfy the stacked equality") {
  Rng rng(35);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_stages = 1 + static_cast<int>(rng.next_u64() % 8);
    const int nx = 1 + static_cast<int>(rng.next_u64() % 4);
    const int nu = 1 + static_cast<int>(rng.next_u64() % 3);
    const MpcProblem p = oracles::random_problem(rng, n_stages, nx, nu);
    const SparseQp qp = assemble_sparse_qp(p);
    Vector u(static_cast<size_t>(n_stages) * nu);
    for (auto& v : u) v = rng.uniform(-1.0, 1.0);
    const Vector x = rollout(p.model, p.x0, u);
    const Vector ax = bm_matvec(qp.A, x, nullptr);
    const Vector bu = bm_matvec(qp.B, u, nullptr);
    double resid = 0.0;
    for (size_t i = 0; i < ax.size(); ++i) resid = std::max(resid, std::abs(ax[i] - bu[i] - qp.w[i]));
    CHECK(resid <= 1e-10 * (1.0 + norm_inf(x)));
  }
}

TEST_CASE("forward substitution against the stored blocks reproduces rollout exactly") {
  Rng rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_stages = 1 + static_cast<int>(rng.next_u64() % 8);
    const MpcProblem p = oracles::random_problem(rng, n_stages, 3, 2);
    const SparseQp qp = assemble_sparse_qp(p);
    Vector u(static_cast<size_t>(n_stages) * 2);
    for (auto& v : u) v = rng.uniform(-1.0, 1.0);
    const Vector x = rollout(p.model, p.x0, u);
    // substitute using only the stored stacked blocks
    Vector sub(static_cast<size_t>(n_stages) * 3, 0.0);
    for (int k = 0; k < n_stages; ++k) {
      Vector acc(3, 0.0);
      if (k >= 1 && qp.A.has(k, k - 1)) {
        Vector t(3, 0.0);
        matvec_accum(qp.A.at(k, k - 1), sub.data() + (k - 1) * 3, t.data(), nullptr);
        for (int i = 0; i < 3; ++i) acc[i] = -t[i];
      }
      for (int i = 0; i < 3; ++i) acc[i] += qp.w[k * 3 + i];
      if (qp.B.has(k, k)) matvec_accum(qp.B.at(k, k), u.data() + k * 2, acc.data(), nullptr);
      for (int i = 0; i < 3; ++i) sub[k * 3 + i] = acc[i];
    }
    for (size_t i = 0; i < x.size(); ++i) CHECK(sub[i] == x[i]);
  }
}

TEST_CASE("objective at the origin is the initial-state constant") {
  Rng rng(37);
  const MpcProblem p = oracles::random_problem(rng, 4, 3, 2);
  const SparseQp qp = assemble_sparse_qp(p);
  const Vector u(static_cast<size_t>(4) * 2, 0.0);
  const Vector x(static_cast<size_t>(4) * 3, 0.0);
  CHECK(eval_objective(qp, u, x) == doctest::Approx(qp.c0).epsilon(1e-15));
  // 1/2 x0^T Q_0 x0 + q_0^T x0
  double expect = dot(p.costs.q[0], p.x0, nullptr);
  Vector q0x(3, 0.0);
  matvec_accum(p.costs.Q[0], p.x0.data(), q0x.data(), nullptr);
  expect += 0.5 * dot(p.x0, q0x, nullptr);
  CHECK(qp.c0 == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("objective vanishes for a fully zeroed instance") {
  Rng rng(38);
  MpcProblem p = oracles::random_problem(rng, 3, 2, 1);
  p.x0.assign(2, 0.0);
  for (auto& v : p.costs.q) v.assign(2, 0.0);
  for (auto& v : p.costs.r) v.assign(1, 0.0);
  const SparseQp qp = assemble_sparse_qp(p);
  CHECK(eval_objective(qp, Vector(3, 0.0), Vector(6, 0.0)) == 0.0);
}

TEST_CASE("objective equals the stage-wise sum oracle") {
  Rng rng(39);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_stages = 1 + static_cast<int>(rng.next_u64() % 20);
    const int nx = 1 + static_cast<int>(rng.next_u64() % 3);
    const int nu = 1 + static_cast<int>(rng.next_u64() % 2);
    const MpcProblem p = oracles::random_problem(rng, n_stages, nx, nu);
    const SparseQp qp = assemble_sparse_qp(p);
    Vector u(static_cast<size_t>(n_stages) * nu);
    for (auto& v : u) v = rng.uniform(-1.0, 1.0);
    const Vector x = rollout(p.model, p.x0, u);
    const double lib = eval_objective(qp, u, x);
    const double ref = oracles::stage_sum_objective(p, u, x);
    CHECK(std::abs(lib - ref) <= 1e-12 * (1.0 + std::abs(ref)));
  }
}

TEST_SUITE_END();
