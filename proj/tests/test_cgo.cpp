#include <doctest.h>

#include <cmath>
#include <random>

#include "pscat/cgo.hpp"

using namespace pscat;

namespace {

MediumComponent contacted_cap(double contrast) {
  MediumComponent m;
  m.support.kind = ShapeKind::spherical_cap;
  m.support.center = Vec3(0.0, 0.0, -0.5);
  m.support.radius = std::sqrt(0.89);
  m.support.axis = Vec3::UnitZ();
  m.support.cap_offset = 0.5;
  m.contrast_value = cplx(contrast, 0.0);
  m.eps0 = contrast;
  PlanarContact pc;
  pc.plane_point = Vec3::Zero();
  pc.plane_normal = Vec3::UnitZ();
  pc.disc_center = Vec3::Zero();
  pc.disc_radius = 0.8;
  m.contact = pc;
  return m;
}

double bilinear_defect(const CVec3& v) {
  return std::abs(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

}  // namespace

TEST_CASE("phase vectors are null and sum to the frequency") {
  std::mt19937_64 rng(20240817ull);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  PlanarContact pc;
  pc.plane_point = Vec3(0.3, 0.1, -0.2);
  pc.plane_normal = Vec3(0.5, -1.0, 2.0).normalized();
  pc.disc_radius = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 xi;
    do {
      xi = Vec3(u(rng), u(rng), u(rng));
    } while (std::hypot(xi[0], xi[1]) < 0.1);
    const double tau = 1.0 + 5.0 * std::abs(u(rng));
    CGOPhase ph = build_phase(xi, tau,
                              trial % 2 ? std::optional<PlanarContact>(pc) : std::nullopt);
    CHECK(bilinear_defect(ph.zeta1) < 1e-12);
    CHECK(bilinear_defect(ph.zeta2) < 1e-12);
    CHECK(bilinear_defect(ph.zeta1_star) < 1e-12);
    CHECK(bilinear_defect(ph.zeta2_star) < 1e-12);
    CHECK(std::sqrt((ph.zeta1 + ph.zeta2 - xi.cast<cplx>()).squaredNorm()) < 1e-12);
    // frame orthonormality
    CHECK(std::abs(ph.e1.dot(ph.e2)) < 1e-14);
    CHECK(std::abs(ph.e1.dot(ph.e3)) < 1e-14);
    CHECK(ph.e1.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ph.U.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("phase preconditions") {
  CHECK_THROWS_AS(build_phase(Vec3(0.0, 0.0, 1.0), 10.0, std::nullopt),
                  PreconditionError);  // no in-plane part
  CHECK_THROWS_AS(build_phase(Vec3(1.0, 0.0, 0.0), 0.0, std::nullopt), PreconditionError);
  CHECK_THROWS_AS(build_phase(Vec3(1.0, 0.0, 0.0), -3.0, std::nullopt), PreconditionError);
}

TEST_CASE("null property survives orthogonal conjugation") {
  CGOPhase ph = build_phase(Vec3(1.0, 0.3, 0.2), 8.0, std::nullopt);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Matrix3d G;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(G);
  Eigen::Matrix3d Q = qr.householderQ();
  if (Q.determinant() < 0.0) Q.col(0) = -Q.col(0);
  CHECK(unitary_conjugate_check(ph, Q));
}

TEST_CASE("plane frame rotates the contact onto a level set") {
  PlanarContact pc;
  pc.plane_point = Vec3(0.4, -0.3, 0.7);
  pc.plane_normal = Vec3(1.0, 1.0, 1.0).normalized();
  PlaneFrame f = plane_frame(pc);
  CHECK((f.U * f.U.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-13);
  // the plane point lands at height = offset in working coordinates
  Vec3 y = f.U.transpose() * pc.plane_point;
  CHECK(y[2] == doctest::Approx(f.offset).epsilon(1e-13));
  // any in-plane displacement keeps the height
  Vec3 t = pc.plane_normal.unitOrthogonal();
  Vec3 y2 = f.U.transpose() * (pc.plane_point + 2.3 * t);
  CHECK(y2[2] == doctest::Approx(f.offset).epsilon(1e-12));
}

TEST_CASE("mirror extension is even across the plane") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 16);
  ContrastExtension ext = mirror_extend(cap, spec);
  CHECK(ext.mirrored);
  const int n = spec.n;
  double onplane_even = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 1; k < n; ++k)
        onplane_even = std::max(onplane_even,
                                std::abs(ext.values[ext.index(i, j, k)] -
                                         ext.values[ext.index(i, j, n - k)]));
  CHECK(onplane_even == 0.0);
  // the cap interior carries its contrast
  bool hit = false;
  for (int i = 0; i < n && !hit; ++i)
    for (int j = 0; j < n && !hit; ++j)
      for (int k = 0; k < n && !hit; ++k)
        if (std::abs(ext.values[ext.index(i, j, k)] - cplx(0.1, 0.0)) == 0.0) hit = true;
  CHECK(hit);
}

TEST_CASE("undersized cube fails with a coverage error") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 16);
  spec.side *= 0.3;
  bool coverage = false;
  try {
    mirror_extend(cap, spec);
  } catch (const NumericsError& e) {
    coverage = e.code() == "coverage";
  }
  CHECK(coverage);
}

TEST_CASE("remainder solve rejects coarse grids") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 16);
  ContrastExtension ext = mirror_extend(cap, spec);
  CGOPhase ph = build_phase(Vec3(1.0, 0.3, 0.2), 10.0, cap.contact);
  CHECK_THROWS_AS(solve_remainder(ext, ph), PreconditionError);
}

TEST_CASE("remainder shrinks like the reciprocal size parameter") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 32);
  ContrastExtension ext = mirror_extend(cap, spec);
  CGOPhase p10 = build_phase(Vec3(1.0, 0.3, 0.2), 10.0, cap.contact);
  CGOPhase p20 = build_phase(Vec3(1.0, 0.3, 0.2), 20.0, cap.contact);
  CGOSolutionPair s10 = solve_remainder(ext, p10);
  CGOSolutionPair s20 = solve_remainder(ext, p20);
  CHECK(s10.omega_l2_b0 > 0.0);
  const double ratio = s10.omega_l2_b0 / s20.omega_l2_b0;
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.8);
  CHECK(s10.iterations > 0);
  CHECK(s10.iterations < 60);
  // carrier-factored finite-difference residual is jump-limited on this
  // discontinuous contrast; at 32 cells per axis it sits near 0.51, so
  // guard the level rather than asserting smallness
  CHECK(s10.fd_residual < 0.7);
}

TEST_CASE("reflected pair vanishes on the plane exactly") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 32);
  ContrastExtension ext = mirror_extend(cap, spec);
  CGOPhase ph = build_phase(Vec3(1.0, 0.3, 0.2), 10.0, cap.contact);
  CGOSolutionPair pair = reflected_pair(solve_remainder(ext, ph));
  REQUIRE(pair.psi.size() == ext.values.size());
  const int n = spec.n;
  for (int i = 0; i < n; i += 3)
    for (int j = 0; j < n; j += 3) {
      CHECK(std::abs(pair.psi[ext.index(i, j, n / 2)]) == 0.0);
      for (int k = 1; k < n; k += 5)
        CHECK(std::abs(pair.psi[ext.index(i, j, k)] + pair.psi[ext.index(i, j, n - k)]) ==
              0.0);
    }
  // the same cancellation through the evaluator, off the lattice; on-plane
  // points have working height equal to the plane offset
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 10; ++t) {
    Vec3 y = spec.center + Vec3(u(rng), u(rng), 0.0);
    CHECK(std::abs(reflected_value(pair, y)) < 1e-12);
  }
}

TEST_CASE("product expansion is an algebraic identity") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 32);
  ContrastExtension ext = mirror_extend(cap, spec);
  CGOPhase ph = build_phase(Vec3(1.0, 0.3, 0.2), 10.0, cap.contact);
  CGOSolutionPair p1 = reflected_pair(solve_remainder(ext, ph, 1));
  CGOSolutionPair p2 = reflected_pair(solve_remainder(ext, ph, 2));
  CHECK(product_expansion_check(p1, p2, 500) < 1e-10);
}

TEST_CASE("cgo evaluators compose carrier and remainder") {
  MediumComponent cap = contacted_cap(0.1);
  CubeGridSpec spec = default_cube(cap, 32);
  ContrastExtension ext = mirror_extend(cap, spec);
  CGOPhase ph = build_phase(Vec3(1.0, 0.3, 0.2), 5.0, cap.contact);
  CGOSolutionPair sol = solve_remainder(ext, ph);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int t = 0; t < 10; ++t) {
    Vec3 y = spec.center + Vec3(u(rng), u(rng), u(rng));
    cplx carrier = std::exp(kImag * (ph.zeta1[0] * y[0] + ph.zeta1[1] * y[1] +
                                     ph.zeta1[2] * y[2]));
    CHECK(std::abs(cgo_value(sol, y) - carrier * (1.0 + remainder_at(sol, y))) < 1e-12);
  }
}

TEST_CASE("oversized contrast diverges with a diagnostic") {
  // the sweep contracts at moderate contrasts even for tau near 1, so the
  // probe has to be pushed well past the physical range to break it
  MediumComponent cap = contacted_cap(20.0);
  CubeGridSpec spec = default_cube(cap, 32);
  ContrastExtension ext = mirror_extend(cap, spec);
  CGOPhase ph = build_phase(Vec3(1.0, 0.3, 0.2), 1.0, cap.contact);
  bool diverged = false;
  try {
    solve_remainder(ext, ph);
  } catch (const NumericsError& e) {
    diverged = e.code() == "divergence";
  }
  CHECK(diverged);
}

TEST_CASE("fourier identity on the detached ball at coarse resolution") {
  SceneC q, qt;
  q.wave_number = qt.wave_number = 1.0;
  q.enclosing_radius = qt.enclosing_radius = 3.0;
  MediumComponent m;
  m.support.kind = ShapeKind::ball;
  m.support.radius = 1.0;
  m.contrast_value = cplx(0.05, 0.0);
  m.eps0 = 0.05;
  q.media.push_back(m);
  m.contrast_value = cplx(0.07, 0.0);
  m.eps0 = 0.07;
  qt.media.push_back(m);
  FourierIdentityReport rep = fourier_identity_run(q, qt, Vec3::UnitX(), {20.0}, 32);
  // the transform reference comes from a separate radial rule; frozen value
  CHECK(rep.fourier_reference.real() ==
        doctest::Approx(0.075691944739878641).epsilon(1e-9));
  CHECK(std::abs(rep.fourier_reference.imag()) < 1e-12);
  CHECK(rep.annotations[0].empty());
  CHECK(rep.discrepancy[0] / std::abs(rep.fourier_reference) < 0.1);
}

TEST_CASE("plain extension covers a detached component") {
  MediumComponent m;
  m.support.kind = ShapeKind::ball;
  m.support.center = Vec3(0.0, 0.0, 2.2);
  m.support.radius = 0.5;
  m.contrast_value = cplx(0.05, 0.0);
  m.eps0 = 0.05;
  CubeGridSpec spec = default_cube(m, 16);
  ContrastExtension ext = plain_extend(m, 0, spec);
  CHECK(!ext.mirrored);
  CHECK(ext.b0_radius > 0.0);
  // contrast samples inside the ball, zero well outside
  int inside = 0, outside_nonzero = 0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k) {
        Vec3 x = ext.U * ext.node(i, j, k);
        bool in = m.support.contains(x);
        cplx v = ext.values[ext.index(i, j, k)];
        if (in && std::abs(v - cplx(0.05, 0.0)) == 0.0) ++inside;
        if (!in && (x - m.support.center).norm() > 0.6 && std::abs(v) != 0.0)
          ++outside_nonzero;
      }
  CHECK(inside > 0);
  CHECK(outside_nonzero == 0);
}
