#include <doctest.h>

#include <cmath>

#include "pscat/forward.hpp"

using namespace pscat;

namespace {

SceneC soft_sphere() {
  SceneC s;
  s.wave_number = 1.0;
  s.enclosing_radius = 3.0;
  Shape sh;
  sh.kind = ShapeKind::ball;
  sh.radius = 1.0;
  s.obstacle = sh;
  return s;
}

SceneC ball_medium(double contrast, const Vec3& center = Vec3::Zero()) {
  SceneC s;
  s.wave_number = 1.0;
  s.enclosing_radius = 4.0;
  MediumComponent m;
  m.support.kind = ShapeKind::ball;
  m.support.center = center;
  m.support.radius = 1.0;
  m.contrast_value = cplx(contrast, 0.0);
  m.eps0 = std::max(1e-6, std::abs(contrast));
  s.media.push_back(m);
  return s;
}

double rel_l2(const std::vector<cplx>& got, const std::vector<cplx>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += std::norm(got[i] - ref[i]);
    den += std::norm(ref[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("soft sphere forward and backward amplitudes") {
  SceneC s = soft_sphere();
  DiscreteScene ds(s, build_boundary_grid(s, 1000), VolumeGrid{});
  Solution sol = ds.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  std::vector<cplx> amps = ds.far_field(sol, {Vec3::UnitZ(), -Vec3::UnitZ()});
  // frozen series values
  CHECK(std::abs(amps[0] - cplx(-1.1687530668115678, 0.84560946240529677)) < 2e-4);
  CHECK(std::abs(amps[1] - cplx(0.087265621481081748, 0.57349764302999479)) < 2e-4);
}

TEST_CASE("boundary refinement improves the soft-sphere error") {
  SceneC s = soft_sphere();
  std::vector<Vec3> dirs = fibonacci_directions(32);
  MieFarField mie =
      mie_oracle(MieKind::soft_sphere, 1.0, cplx(0.0, 0.0), 1.0, Vec3::UnitZ(), dirs);
  double coarse, fine;
  {
    DiscreteScene ds(s, build_boundary_grid(s, 250), VolumeGrid{});
    coarse = rel_l2(ds.far_field(ds.solve(PlaneWave{Vec3::UnitZ(), 1.0}), dirs), mie.values);
  }
  {
    DiscreteScene ds(s, build_boundary_grid(s, 1000), VolumeGrid{});
    fine = rel_l2(ds.far_field(ds.solve(PlaneWave{Vec3::UnitZ(), 1.0}), dirs), mie.values);
  }
  CHECK(fine < coarse);
  CHECK(fine < 1e-3);
}

TEST_CASE("penetrable ball against the frozen series") {
  SceneC s = ball_medium(0.05);
  DiscreteScene ds(s, BoundaryGrid{}, build_volume_grid_radial(s, 2000));
  Solution sol = ds.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  std::vector<cplx> amps = ds.far_field(sol, {Vec3::UnitZ(), -Vec3::UnitZ()});
  CHECK(std::abs(amps[0] - cplx(-0.01647637342809358, 0.00018398079434396933)) < 5e-5);
  CHECK(std::abs(amps[1] - cplx(-0.010728878388409288, 0.00017848748544973441)) < 5e-5);
}

TEST_CASE("zero contrast scatters nothing") {
  SceneC s = ball_medium(0.0);
  DiscreteScene ds(s, BoundaryGrid{}, build_volume_grid_radial(s, 500));
  Solution sol = ds.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  for (const cplx& a : ds.far_field(sol, fibonacci_directions(16)))
    CHECK(std::abs(a) < 1e-14);
  for (const cplx& u : sol.us) CHECK(std::abs(u) < 1e-14);
}

TEST_CASE("translation covariance of the far field") {
  // moving the ball by t multiplies A by e^{i kappa (theta - xhat) . t}
  const Vec3 t(0.3, -0.2, 0.4);
  SceneC s0 = ball_medium(0.05);
  SceneC st = ball_medium(0.05, t);
  std::vector<Vec3> dirs = fibonacci_directions(12);
  DiscreteScene d0(s0, BoundaryGrid{}, build_volume_grid_radial(s0, 800));
  DiscreteScene dt(st, BoundaryGrid{}, build_volume_grid_radial(st, 800));
  const Vec3 theta = Vec3::UnitZ();
  std::vector<cplx> a0 = d0.far_field(d0.solve(PlaneWave{theta, 1.0}), dirs);
  std::vector<cplx> at = dt.far_field(dt.solve(PlaneWave{theta, 1.0}), dirs);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    cplx phase = std::exp(kImag * (theta - dirs[i]).dot(t));
    CHECK(std::abs(at[i] - phase * a0[i]) < 1e-10);
  }
}

TEST_CASE("iterative and dense paths agree") {
  SceneC s = soft_sphere();
  BoundaryGrid grid = build_boundary_grid(s, 400);
  SolverOptions dense;
  SolverOptions iter;
  iter.dense_limit = 0;  // force the matrix-free path
  DiscreteScene dd(s, grid, VolumeGrid{}, dense);
  DiscreteScene di(s, grid, VolumeGrid{}, iter);
  std::vector<Vec3> dirs = fibonacci_directions(8);
  Solution sd = dd.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  Solution si = di.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  CHECK(sd.iterations == 0);
  CHECK(si.iterations > 0);
  std::vector<cplx> ad = dd.far_field(sd, dirs);
  std::vector<cplx> ai = di.far_field(si, dirs);
  for (std::size_t i = 0; i < dirs.size(); ++i) CHECK(std::abs(ad[i] - ai[i]) < 1e-6);
}

TEST_CASE("reciprocity of the composite far field") {
  SceneC s;
  s.wave_number = 1.0;
  s.enclosing_radius = 3.0;
  Shape dome;
  dome.kind = ShapeKind::half_ball;
  dome.radius = 1.0;
  dome.axis = Vec3::UnitZ();
  s.obstacle = dome;
  MediumComponent m;
  m.support.kind = ShapeKind::ball;
  m.support.center = Vec3(0.0, 0.0, 1.8);
  m.support.radius = 0.5;
  m.contrast_value = cplx(0.1, 0.0);
  m.eps0 = 0.1;
  s.media.push_back(m);

  DiscreteScene ds(s, build_boundary_grid(s, 700),
                   build_volume_grid_radial(s, 700));
  const Vec3 a = Vec3(1.0, 0.5, -0.3).normalized();
  const Vec3 b = Vec3(-0.2, 0.8, 0.6).normalized();
  cplx fwd = ds.far_field(ds.solve(PlaneWave{a, 1.0}), {b})[0];
  cplx rev = ds.far_field(ds.solve(PlaneWave{-b, 1.0}), {-a})[0];
  CHECK(std::abs(fwd - rev) < 5e-3 * std::max(std::abs(fwd), 1.0));
}

TEST_CASE("scattering conservation at the solver level") {
  SceneC s = soft_sphere();
  DiscreteScene ds(s, build_boundary_grid(s, 1000), VolumeGrid{});
  Solution sol = ds.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  std::vector<Vec3> dirs = fibonacci_directions(800);
  std::vector<cplx> amps = ds.far_field(sol, dirs);
  double sigma_quad = 0.0;
  for (const cplx& a : amps) sigma_quad += std::norm(a);
  sigma_quad *= 4.0 * kPi / dirs.size();
  double sigma_fwd = 4.0 * kPi * ds.far_field(sol, {Vec3::UnitZ()})[0].imag();
  CHECK(sigma_quad == doctest::Approx(sigma_fwd).epsilon(2e-3));
}

TEST_CASE("incident sampling at cells") {
  SceneC s = ball_medium(0.05);
  VolumeGrid grid = build_volume_grid_radial(s, 300);
  PlaneWave pw{Vec3::UnitX(), 1.0};
  std::vector<cplx> ui = incident_at_cells(grid, pw);
  REQUIRE(ui.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); i += 29)
    CHECK(std::abs(ui[i] - evaluate_plane_wave(pw, grid.cells[i])) < 1e-15);
  // a distant point source needs no averaging and matches the center value
  PointSource ps;
  ps.location = Vec3(0.0, 0.0, 5.0);
  std::vector<cplx> up = incident_at_cells(grid, IncidentField(ps));
  for (std::size_t i = 0; i < grid.size(); i += 29)
    CHECK(std::abs(up[i] - evaluate_source(ps, grid.cells[i])) < 1e-12);
}

TEST_CASE("scattered field rejects interior targets") {
  SceneC s = soft_sphere();
  DiscreteScene ds(s, build_boundary_grid(s, 300), VolumeGrid{});
  Solution sol = ds.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  CHECK_THROWS_AS(ds.scattered_field(sol, {Vec3(0.0, 0.0, 0.2)}), DomainError);
}

TEST_CASE("difference of close contrasts satisfies its equation") {
  SceneC q = ball_medium(0.05);
  SceneC qt = ball_medium(0.06);
  DifferenceResidual r = difference_residual(q, qt, 0.2, PlaneWave{Vec3::UnitZ(), 1.0});
  CHECK(r.interior_cells > 100);
  CHECK(r.ratio < 0.1);
  CHECK(r.residual_norm < r.dominant_norm);
}

TEST_CASE("scattered field matches the far-field limit at large radius") {
  SceneC s = soft_sphere();
  DiscreteScene ds(s, build_boundary_grid(s, 1000), VolumeGrid{});
  Solution sol = ds.solve(PlaneWave{Vec3::UnitZ(), 1.0});
  const Vec3 xhat = Vec3(0.3, -0.4, 0.8).normalized();
  cplx amp = ds.far_field(sol, {xhat})[0];
  const double r = 600.0;
  cplx near = ds.scattered_field(sol, {r * xhat})[0];
  cplx limit = std::exp(kImag * r) / r * amp;
  CHECK(std::abs(near - limit) < 2e-3 * std::abs(limit));
}
