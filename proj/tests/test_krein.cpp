#include <doctest.h>

#include <cmath>
#include <random>

#include "tracesum/errors.hpp"
#include "tracesum/krein.hpp"
#include "tracesum/oracle.hpp"

using namespace tracesum;

namespace
{

std::vector<double> energies(const SpectrumReport &r)
{
  std::vector<double> e;
  for (const auto &root : r.roots)
  {
    e.push_back(root.energy);
  }
  std::sort(e.begin(), e.end());
  return e;
}

std::vector<BlockSpec> flat_family(int kmax)
{
  std::vector<BlockSpec> s;
  for (int k = -kmax; k <= kmax; k++)
  {
    if (k != 0)
      s.push_back(BlockSpec::flat_mode(k));
  }
  return s;
}

CMatrix random_matrix(int r, int c, std::mt19937_64 &rng)
{
  std::normal_distribution<double> d;
  CMatrix m(r, c);
  for (int i = 0; i < r; i++)
    for (int j = 0; j < c; j++)
      m(i, j) = Complex(d(rng), d(rng));
  return m;
}

ScalarFn bump(double center, double width)
{
  return [=](double x) { return Complex(1.0, 0.3 * (x - center)) * std::exp(-std::pow((x - center) / width, 2)); };
}

}  // namespace

TEST_CASE("secular matrix at the base point")
{
  const auto p = assemble_problem(line_blocks({0, 1, 2.5}), 1.0);
  const int m = p.total_dim();
  const auto params = make_params(p, Representation::Renormed, CMatrix::Identity(m, m), CMatrix::Zero(m, m));
  CHECK(params.rank() == m);
  const SecularSystem sys(p, params);
  CHECK(sys.secular_matrix(1.0).norm() < 1e-13);

  const auto d = delta_params(p, {-1, 2, -3});
  CHECK((SecularSystem(p, d).secular_matrix(1.0) - d.theta).norm() < 1e-13);
}

TEST_CASE("flat mode family is diagonal")
{
  const auto p = assemble_problem(flat_family(4), 0.0);
  const SecularSystem sys(p, robin_mode_params(p, std::vector<double>(8, -1.0)));
  const CMatrix mz = sys.secular_matrix(0.7);
  CHECK((mz - CMatrix(mz.diagonal().asDiagonal())).norm() < 1e-14);
  CHECK(hermitian_defect(mz) < 1e-14);
}

TEST_CASE("rank-one parameters compress the dense secular matrix")
{
  const auto p = assemble_problem(line_blocks({0, 1.5}), 1.0);
  const int m = p.total_dim();
  const CMatrix q = representation_metric(p, Representation::Renormed);
  const auto full = make_params(p, Representation::Renormed, CMatrix::Identity(m, m), CMatrix::Zero(m, m));
  std::mt19937_64 rng(11);
  CVector u = random_matrix(m, 1, rng).col(0);
  u /= std::sqrt((u.adjoint() * q * u)(0, 0).real());
  const CMatrix pi = u * u.adjoint() * q;
  const CMatrix theta = 0.8 * pi;
  const auto one = make_params(p, Representation::Renormed, pi, theta);
  REQUIRE(one.rank() == 1);
  const SecularSystem s1(p, one), sf(p, full);
  const CVector c = full.basis.adjoint() * q * one.basis.col(0);
  for (double z : {0.3, 1.7, 4.0})
  {
    const Complex expected = 0.8 + (c.adjoint() * sf.secular_matrix(z) * c)(0, 0);
    CHECK(std::abs(s1.secular_matrix(z)(0, 0) - expected) < 1e-12);
  }
}

TEST_CASE("secular matrix Hermitian symmetry")
{
  const auto p = assemble_problem(line_blocks({0, 0.75, 2}, 3.0), 1.0);
  const SecularSystem sys(p, delta_params(p, {-2, 1, -0.5}));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> re(0.05, 10.0), im(-5.0, 5.0);
  for (int t = 0; t < 20; t++)
  {
    const Complex z(re(rng), im(rng));
    const CMatrix a = sys.secular_matrix(z), b = sys.secular_matrix(std::conj(z));
    CHECK((a - b.adjoint()).norm() < 1e-12 * (1 + a.norm()));
  }
  const CMatrix d = sys.secular_derivative(1.3);
  CHECK(Eigen::SelfAdjointEigenSolver<CMatrix>(d).eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("single delta bound states")
{
  const auto p = assemble_problem(line_blocks({0.0}), 1.0);
  for (double alpha : {-0.5, -2.0, -8.0})
  {
    for (auto rep : {Representation::Renormed, Representation::Regularized})
    {
      const auto r = SecularSystem(p, delta_params(p, {alpha}, rep)).find_eigenvalues({1e-6, 100.0});
      REQUIRE(r.roots.size() == 1);
      CHECK(std::abs(r.roots[0].energy + alpha * alpha / 4) < 1e-10);
      CHECK(r.roots[0].multiplicity == 1);
      CHECK(r.roots[0].residual < 1e-9);
    }
  }
  CHECK(SecularSystem(p, delta_params(p, {2.0})).find_eigenvalues().roots.empty());
  CHECK(SecularSystem(p, decoupled_params(p)).find_eigenvalues().roots.empty());
}

TEST_CASE("Robin mode against the mode oracle")
{
  const auto p = assemble_problem({BlockSpec::flat_mode(1), BlockSpec::flat_mode(2)}, 0.0);
  const SecularSystem sys(p, robin_mode_params(p, {-4.0, -4.0}));
  const auto e = energies(sys.find_eigenvalues());
  std::vector<double> fd;
  for (std::size_t i = 0; i < 2; i++)
  {
    for (double v : mode_fd_spectrum(p.block_index(i), robin_parameter(p, i, -4.0)))
      fd.push_back(v);
  }
  std::sort(fd.begin(), fd.end());
  REQUIRE(e.size() == fd.size());
  for (std::size_t i = 0; i < e.size(); i++)
    CHECK(std::abs(e[i] - fd[i]) < 1e-6);
  CHECK(std::abs(e[0] + 8.0) < 1e-12);
}

TEST_CASE("eigenfunction profile")
{
  const auto p = assemble_problem(line_blocks({0.0}), 1.0);
  const SecularSystem sys(p, delta_params(p, {-2.0}));
  const auto ef = eigenfunction(sys, 1.0);
  // u = e^{-|x|} up to phase, unit norm.
  const Complex phase = ef.blocks[1](0.0) / std::abs(ef.blocks[1](0.0));
  for (double x : {0.1, 0.5, 2.0})
  {
    CHECK(std::abs(ef.blocks[1](x) / phase - std::exp(-x)) < 1e-10);
    CHECK(std::abs(ef.blocks[0](-x) / phase - std::exp(-x)) < 1e-10);
  }
  CHECK(std::abs(l2_inner(p, ef.blocks, ef.blocks) - 1.0) < 1e-10);

  const auto q = assemble_problem(line_blocks({0, 1, 2.5}), 1.0);
  const SecularSystem s3(q, delta_params(q, {-2, -1, -3}));
  for (const auto &root : s3.find_eigenvalues().roots)
  {
    const auto f = eigenfunction(s3, root.z);
    // Continuity at each point.
    CHECK(std::abs(f.blocks[0](0.0) - f.blocks[1](0.0)) < 1e-10);
    CHECK(std::abs(f.blocks[1](1.0) - f.blocks[2](1.0)) < 1e-10);
    CHECK(std::abs(f.blocks[2](2.5) - f.blocks[3](2.5)) < 1e-10);
  }
}

TEST_CASE("error conditions")
{
  const auto p = assemble_problem(line_blocks({0.0}), 1.0);
  const SecularSystem sys(p, delta_params(p, {-2.0}));
  CHECK_THROWS_WITH_AS(eigenfunction(sys, 0.7), doctest::Contains("DegenerateNull"), Error);
  CHECK_THROWS_WITH_AS(eigenfunction(SecularSystem(p, decoupled_params(p)), 1.0), doctest::Contains("DegenerateNull"),
                       Error);
  const PiecewiseFn f{bump(-1, 1), bump(1, 1)};
  CHECK_THROWS_WITH_AS(resolvent_apply(sys, 1.0, f), doctest::Contains("SecularSingular"), Error);
  CHECK_THROWS_WITH_AS(sys.secular_matrix(-0.5), doctest::Contains("SpectrumHit"), Error);
  CHECK_FALSE(sys.admissible(-0.5));
  CHECK_THROWS_WITH_AS(sys.find_eigenvalues({5.0, 1.0}), doctest::Contains("SearchFailure"), Error);
  CHECK_THROWS_WITH_AS(sys.find_eigenvalues({-1.0, 1.0}), doctest::Contains("SearchFailure"), Error);
  CHECK_THROWS_WITH_AS(
    make_params(p, Representation::Renormed, CMatrix::Constant(2, 2, 1.0), CMatrix::Zero(2, 2)),
    doctest::Contains("not idempotent"), Error);
}

TEST_CASE("resolvent")
{
  const auto p = assemble_problem(line_blocks({0.0, 1.0}), 1.0);
  const PiecewiseFn f{bump(-1, 0.7), bump(0.4, 0.3), bump(1.8, 0.5)};
  const PiecewiseFn g{bump(-0.5, 0.4), bump(0.6, 0.2), bump(1.2, 1.0)};
  const Complex z(2.0, 1.0);

  const auto free = free_resolvent_apply(p, z, f);
  const auto dec = resolvent_apply(SecularSystem(p, decoupled_params(p)), z, f);
  for (std::size_t i = 0; i < 3; i++)
  {
    for (double x : {-0.3, 0.5, 1.5})
    {
      if (p.block(i).contains(x))
        CHECK(std::abs(free[i](x) - dec[i](x)) < 1e-12);
    }
  }

  const SecularSystem sys(p, delta_params(p, {-2.0, -1.5}));
  // R(z) - R(w) = (w - z) R(z) R(w).
  const Complex w(1.0, -1.0);
  const auto rz = resolvent_apply(sys, z, f);
  const auto rw = resolvent_apply(sys, w, f);
  const auto rzw = resolvent_apply(sys, z, rw);
  const double scale = std::sqrt(l2_inner(p, rz, rz).real());
  for (std::size_t i = 0; i < 3; i++)
  {
    for (double x : {-2.0, -0.2, 0.3, 0.9, 1.4, 3.0})
    {
      if (p.block(i).contains(x))
        CHECK(std::abs(rz[i](x) - rw[i](x) - (w - z) * rzw[i](x)) < 1e-6 * scale);
    }
  }
  // Weak form: <g, (R(z) - R(w)) f> = (w - z) <R(conj z) g, R(w) f>.
  const auto rg_conj = resolvent_apply(sys, std::conj(z), g);
  const Complex weak = l2_inner(p, g, rz) - l2_inner(p, g, rw) - (w - z) * l2_inner(p, rg_conj, rw);
  CHECK(std::abs(weak) < 1e-8);

  // Self-adjointness at real z.
  const auto rf = resolvent_apply(sys, 2.5, f);
  const auto rg = resolvent_apply(sys, 2.5, g);
  CHECK(std::abs(l2_inner(p, g, rf) - l2_inner(p, rg, f)) < 1e-7);

  // Simple pole at an eigenvalue: |<f, R f>| ~ 1/(z - z0).
  const auto roots = sys.find_eigenvalues().roots;
  REQUIRE_FALSE(roots.empty());
  const double z0 = roots[0].z;
  const double e1 = 1e-3, e2 = 1e-4;
  const double a1 = std::abs(l2_inner(p, f, resolvent_apply(sys, z0 + e1, f)));
  const double a2 = std::abs(l2_inner(p, f, resolvent_apply(sys, z0 + e2, f)));
  CHECK(std::log(a2 / a1) / std::log(e2 / e1) == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("delta prime against transfer matrix")
{
  const auto p = assemble_problem(line_blocks({0.0, 1.5}), 1.0);
  for (const auto &beta : std::vector<std::vector<double>>{{-1.0, -0.5}, {-0.3, 2.0}, {-2.0, -2.0}})
  {
    const auto k = energies(SecularSystem(p, delta_prime_params(p, beta)).find_eigenvalues({1e-6, 100.0}));
    const auto t = energies(transfer_matrix_spectrum(delta_prime_model({0.0, 1.5}, beta), -100.0, -1e-6));
    REQUIRE(k.size() == t.size());
    for (std::size_t i = 0; i < k.size(); i++)
      CHECK(std::abs(k[i] - t[i]) < 1e-7);
  }
  // Single delta': E = -4 / beta^2.
  const auto q = assemble_problem(line_blocks({0.0}), 1.0);
  const auto r = SecularSystem(q, delta_prime_params(q, {-1.0})).find_eigenvalues();
  REQUIRE(r.roots.size() == 1);
  CHECK(std::abs(r.roots[0].z - 4.0) < 1e-10);
}

TEST_CASE("truncation stability")
{
  const auto near = assemble_problem(line_blocks({0.0}), 1.0);
  const auto base = energies(SecularSystem(near, delta_params(near, {-2.0})).find_eigenvalues());
  // A free junction far away changes nothing; a weak delta far away only adds its own state.
  const auto far = assemble_problem(line_blocks({0.0, 30.0}), 1.0);
  const auto e1 = energies(SecularSystem(far, delta_params(far, {-2.0, 0.0})).find_eigenvalues());
  REQUIRE(e1.size() == 1);
  CHECK(std::abs(e1[0] - base[0]) < 1e-6);
  const auto far2 = assemble_problem(line_blocks({0.0, 100.0}), 1.0);
  const auto e2 = energies(SecularSystem(far2, delta_params(far2, {-2.0, -0.5})).find_eigenvalues());
  REQUIRE(e2.size() == 2);
  CHECK(std::abs(e2[0] - base[0]) < 1e-6);
  CHECK(std::abs(e2[1] + 0.0625) < 1e-6);
}

TEST_CASE("representations agree")
{
  std::mt19937_64 rng(17);
  const std::vector<std::vector<BlockSpec>> layouts{
    line_blocks({0.0}),
    {BlockSpec::left_half_line(0), BlockSpec::interval(0, 1.5), BlockSpec::right_half_line(1.5)},
    {BlockSpec::interval(0, 1), BlockSpec::flat_mode(1)}};
  for (const auto &layout : layouts)
  {
    const auto p = assemble_problem(layout, 0.5);
    const int m = p.total_dim();
    for (int t = 0; t < 4; t++)
    {
      const int rank = 1 + t % m;
      const CMatrix v = random_matrix(m, rank, rng);
      CMatrix l = random_matrix(rank, rank, rng);
      l = (l + l.adjoint()).eval() * 0.5;
      const auto a = from_boundary_conditions(p, v, l, Representation::Renormed);
      const auto b = from_boundary_conditions(p, v, l, Representation::Regularized);
      const auto c = convert_params(p, a, Representation::Regularized);
      const SecularSystem sa(p, a), sb(p, b), sc(p, c);
      for (double z : {0.2, 1.0, 3.0})
      {
        CHECK((sa.secular_matrix(z) - sb.secular_matrix(z)).norm() < 1e-10);
        CHECK((sa.secular_matrix(z) - sc.secular_matrix(z)).norm() < 1e-10);
      }
      const auto ea = energies(sa.find_eigenvalues({1e-3, 50.0}));
      const auto eb = energies(sb.find_eigenvalues({1e-3, 50.0}));
      REQUIRE(ea.size() == eb.size());
      for (std::size_t i = 0; i < ea.size(); i++)
        CHECK(std::abs(ea[i] - eb[i]) < 1e-9);

      // Dense (Pi, Theta) round trip.
      const auto d = make_params(p, Representation::Regularized, projection_matrix(p, b), theta_matrix(p, b));
      const auto ed = energies(SecularSystem(p, d).find_eigenvalues({1e-3, 50.0}));
      REQUIRE(ed.size() == eb.size());
      for (std::size_t i = 0; i < ed.size(); i++)
        CHECK(std::abs(ed[i] - eb[i]) < 1e-9);
    }
  }
}

TEST_CASE("frozen two-delta spectrum and report")
{
  const auto p = assemble_problem(line_blocks({0.0, 2.0}), 1.0);
  const SecularSystem sys(p, delta_params(p, {-2.0, -2.0}));
  const auto r = sys.find_eigenvalues();
  REQUIRE(r.roots.size() == 2);
  const auto e = energies(r);
  CHECK(e[0] == doctest::Approx(-1.22956507257637).epsilon(1e-12));
  CHECK(e[1] == doctest::Approx(-0.634909570546914).epsilon(1e-12));
  const std::string j = r.to_json();
  for (const char *key : {"\"source\"", "\"roots\"", "\"z\"", "\"E\"", "\"residual\"", "\"bracket\"",
                          "\"multiplicity\"", "\"params_digest\"", "\"truncation\"", "\"search\""})
  {
    CHECK(j.find(key) != std::string::npos);
  }
  CHECK(r.params_digest == SecularSystem(p, delta_params(p, {-2.0, -2.0})).params_digest());
  CHECK(r.params_digest != SecularSystem(p, delta_params(p, {-2.0, -2.1})).params_digest());
  CHECK(r.to_json() == sys.find_eigenvalues().to_json());
}
