#include <doctest.h>

#include <cmath>
#include <complex>

#include "pscat/geometry.hpp"
#include "pscat/specialfn.hpp"

using namespace pscat;

TEST_CASE("fundamental solution at unit distance") {
  // e^i / (4 pi), quadruple-precision reference
  cplx v = fundamental_solution(Vec3(1.0, 0.0, 0.0), Vec3::Zero(), 1.0);
  CHECK(v.real() == doctest::Approx(0.042995891371431802).epsilon(1e-15));
  CHECK(v.imag() == doctest::Approx(0.066962133350290947).epsilon(1e-15));
}

TEST_CASE("fundamental solution symmetry and scaling") {
  Vec3 x(0.3, -0.7, 1.1), y(-0.2, 0.4, 0.5);
  CHECK(std::abs(fundamental_solution(x, y, 2.5) - fundamental_solution(y, x, 2.5)) == 0.0);
  // pure 1/(4 pi r) at kappa -> 0 limit is not exposed; check |Phi| = 1/(4 pi r)
  double r = (x - y).norm();
  CHECK(std::abs(fundamental_solution(x, y, 3.0)) ==
        doctest::Approx(1.0 / (4.0 * kPi * r)).epsilon(1e-14));
  CHECK_THROWS_AS(fundamental_solution(x, x, 1.0), DomainError);
}

TEST_CASE("fundamental solution gradient matches central differences") {
  Vec3 x(0.4, 0.2, -0.9), y(1.3, -0.5, 0.1);
  CVec3 g = fundamental_solution_grad_x(x, y, 1.7);
  const double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    cplx fd = (fundamental_solution(xp, y, 1.7) - fundamental_solution(xm, y, 1.7)) / (2.0 * h);
    CHECK(std::abs(g[a] - fd) < 1e-8);
  }
}

TEST_CASE("first radiating multipole") {
  cplx h1 = spherical_hankel_1_1(1.0);
  CHECK(h1.real() == doctest::Approx(0.30116867893975679).epsilon(1e-15));
  CHECK(h1.imag() == doctest::Approx(-1.3817732906760362).epsilon(1e-15));
  // half-integer Bessel reference at sqrt(3)
  cplx h1s = spherical_hankel_1_1(std::sqrt(3.0));
  CHECK(h1s.real() == doctest::Approx(0.42170624242970343).epsilon(1e-14));
  CHECK(h1s.imag() == doctest::Approx(-0.5163412529909504).epsilon(1e-14));
  CHECK_THROWS_AS(spherical_hankel_1_1(0.0), DomainError);
  CHECK_THROWS_AS(spherical_hankel_1_1(-2.0), DomainError);
}

TEST_CASE("point sources") {
  PointSource mono;
  mono.location = Vec3(0.5, -0.5, 2.0);
  mono.wave_number = 1.3;
  Vec3 y(1.0, 0.2, 0.4);
  CHECK(std::abs(evaluate_source(mono, y) -
                 fundamental_solution(y, mono.location, 1.3)) == 0.0);

  PointSource dip;
  dip.kind = SourceKind::dipole;
  dip.location = Vec3::Zero();
  dip.axis = Vec3::UnitZ();
  dip.wave_number = 1.0;
  // on-axis: cos = 1; equatorial: cos = 0
  CHECK(std::abs(evaluate_source(dip, Vec3(0.0, 0.0, 2.0)) - spherical_hankel_1_1(2.0)) <
        1e-15);
  CHECK(std::abs(evaluate_source(dip, Vec3(2.0, 0.0, 0.0))) < 1e-15);
  // rho = sqrt(3), cos = 1/sqrt(3)
  cplx v = evaluate_source(dip, Vec3(1.0, 1.0, 1.0));
  cplx ref = spherical_hankel_1_1(std::sqrt(3.0)) / std::sqrt(3.0);
  CHECK(std::abs(v - ref) < 1e-15);
}

TEST_CASE("source gradients match central differences") {
  for (SourceKind kind : {SourceKind::monopole, SourceKind::dipole}) {
    PointSource src;
    src.kind = kind;
    src.location = Vec3(0.1, 0.2, 0.3);
    src.axis = Vec3(1.0, 1.0, 2.0).normalized();
    src.wave_number = 1.4;
    Vec3 y(1.1, -0.6, 0.9);
    CVec3 g = source_gradient(src, y);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
      Vec3 yp = y, ym = y;
      yp[a] += h;
      ym[a] -= h;
      cplx fd = (evaluate_source(src, yp) - evaluate_source(src, ym)) / (2.0 * h);
      CHECK(std::abs(g[a] - fd) < 1e-7);
    }
  }
}

TEST_CASE("plane wave value and gradient") {
  PlaneWave pw;
  pw.direction = Vec3::UnitZ();
  pw.wave_number = 1.0;
  cplx v = evaluate_plane_wave(pw, Vec3(0.2, -0.4, 0.7));
  CHECK(v.real() == doctest::Approx(0.76484218728448843).epsilon(1e-15));
  CHECK(v.imag() == doctest::Approx(0.64421768723769105).epsilon(1e-15));
  CVec3 g = plane_wave_gradient(pw, Vec3(0.2, -0.4, 0.7));
  CVec3 expected = kImag * pw.wave_number * v * pw.direction.cast<cplx>();
  CHECK(std::sqrt((g - expected).squaredNorm()) < 1e-15);
}

TEST_CASE("soft sphere far field against the frozen series") {
  std::vector<Vec3> dirs = {Vec3::UnitZ(), -Vec3::UnitZ()};
  MieFarField mie = mie_oracle(MieKind::soft_sphere, 1.0, cplx(0.0, 0.0), 1.0,
                               Vec3::UnitZ(), dirs);
  REQUIRE(mie.values.size() == 2);
  CHECK(mie.warnings.empty());
  CHECK(mie.values[0].real() == doctest::Approx(-1.1687530668115678).epsilon(1e-13));
  CHECK(mie.values[0].imag() == doctest::Approx(0.84560946240529677).epsilon(1e-13));
  CHECK(mie.values[1].real() == doctest::Approx(0.087265621481081748).epsilon(1e-13));
  CHECK(mie.values[1].imag() == doctest::Approx(0.57349764302999479).epsilon(1e-13));
}

TEST_CASE("soft sphere long-wavelength limit: A -> -radius") {
  std::vector<Vec3> dirs = {Vec3::UnitZ(), Vec3::UnitX(), -Vec3::UnitZ()};
  MieFarField mie =
      mie_oracle(MieKind::soft_sphere, 1.0, cplx(0.0, 0.0), 0.01, Vec3::UnitZ(), dirs);
  for (const cplx& a : mie.values) CHECK(std::abs(a + 1.0) < 0.05);
}

TEST_CASE("penetrable ball far field against the frozen series") {
  std::vector<Vec3> dirs = {Vec3::UnitZ(), -Vec3::UnitZ()};
  MieFarField mie = mie_oracle(MieKind::homogeneous_ball, 1.0, cplx(0.05, 0.0), 1.0,
                               Vec3::UnitZ(), dirs);
  CHECK(mie.values[0].real() == doctest::Approx(-0.01647637342809358).epsilon(1e-12));
  CHECK(mie.values[0].imag() == doctest::Approx(0.00018398079434396933).epsilon(1e-12));
  CHECK(mie.values[1].real() == doctest::Approx(-0.010728878388409288).epsilon(1e-12));
  CHECK(mie.values[1].imag() == doctest::Approx(0.00017848748544973441).epsilon(1e-12));
}

TEST_CASE("penetrable ball approaches the weak-contrast closed form") {
  // single-scattering limit: A_fwd = -contrast * kappa^2 R^3 / 3 = -1/60 here;
  // the backward value integrates e^{2 i kappa z} over the ball instead
  std::vector<Vec3> dirs = {Vec3::UnitZ(), -Vec3::UnitZ()};
  MieFarField mie = mie_oracle(MieKind::homogeneous_ball, 1.0, cplx(0.05, 0.0), 1.0,
                               Vec3::UnitZ(), dirs);
  CHECK(std::abs(mie.values[0] - cplx(-1.0 / 60.0, 0.0)) <
        0.1 * std::abs(cplx(-1.0 / 60.0, 0.0)));
  CHECK(std::abs(mie.values[1] - cplx(-0.01088494437449979, 0.0)) <
        0.1 * 0.01088494437449979);
}

TEST_CASE("scattering conservation of the soft sphere series") {
  // total cross section two ways: forward amplitude vs |A|^2 integrated
  std::vector<Vec3> dirs = fibonacci_directions(4000);
  MieFarField mie =
      mie_oracle(MieKind::soft_sphere, 1.0, cplx(0.0, 0.0), 1.0, Vec3::UnitZ(), dirs);
  double sigma_quad = 0.0;
  for (const cplx& a : mie.values) sigma_quad += std::norm(a);
  sigma_quad *= 4.0 * kPi / dirs.size();
  MieFarField fwd =
      mie_oracle(MieKind::soft_sphere, 1.0, cplx(0.0, 0.0), 1.0, Vec3::UnitZ(),
                 {Vec3::UnitZ()});
  double sigma_fwd = 4.0 * kPi * fwd.values[0].imag();
  CHECK(sigma_fwd == doctest::Approx(10.626241899593979).epsilon(1e-13));
  CHECK(sigma_quad == doctest::Approx(sigma_fwd).epsilon(1e-4));
}

TEST_CASE("series term-count guard") {
  CHECK_THROWS_AS(mie_oracle(MieKind::soft_sphere, 1.0, cplx(0.0, 0.0), 1.0,
                             Vec3::UnitZ(), {Vec3::UnitZ()}, 5),
                  PreconditionError);
}

TEST_CASE("complex spherical bessel by downward recurrence") {
  // j0(z) = sin(z)/z holds off the real axis
  cplx z(1.3, 0.4);
  std::vector<cplx> jn = spherical_jn_complex(4, z);
  REQUIRE(jn.size() == 5);
  CHECK(std::abs(jn[0] - std::sin(z) / z) < 1e-14);
  // real-argument spot value j1(2)
  std::vector<cplx> j2 = spherical_jn_complex(2, cplx(2.0, 0.0));
  CHECK(j2[1].real() == doctest::Approx(0.43539777497999162).epsilon(1e-14));
  CHECK(std::abs(j2[1].imag()) < 1e-16);
}
