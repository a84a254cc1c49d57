#include "pscat/specialfn.hpp"

#include <cmath>

namespace pscat {

cplx fundamental_solution(const Vec3& x, const Vec3& y, double kappa) {
  const double r = (x - y).norm();
  if (r <= 0.0) {
    throw DomainError("fundamental_solution: evaluation at the singular point x == y");
  }
  return std::polar(1.0, kappa * r) / (4.0 * kPi * r);
}

CVec3 fundamental_solution_grad_x(const Vec3& x, const Vec3& y, double kappa) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r <= 0.0) {
    throw DomainError("fundamental_solution_grad_x: evaluation at the singular point x == y");
  }
  // d/dx_j [e^{ikr}/(4 pi r)] = e^{ikr}(ikr - 1)/(4 pi r^3) * d_j
  const cplx f = std::polar(1.0, kappa * r) * (kImag * kappa * r - 1.0) /
                 (4.0 * kPi * r * r * r);
  return f * d.cast<cplx>();
}

cplx spherical_hankel_1_1(double z) {
  if (z <= 0.0) {
    throw DomainError("spherical_hankel_1_1: argument must be positive");
  }
  return -std::polar(1.0, z) * (z + kImag) / (z * z);
}

static cplx spherical_hankel_1_0(double z) {
  // h_0^{(1)}(z) = -i e^{iz} / z
  return -kImag * std::polar(1.0, z) / z;
}

cplx evaluate_source(const PointSource& src, const Vec3& y) {
  if (src.kind == SourceKind::monopole) {
    return fundamental_solution(y, src.location, src.wave_number);
  }
  const Vec3 d = y - src.location;
  const double rho = d.norm();
  if (rho <= 0.0) {
    throw DomainError("evaluate_source: evaluation at the singular point");
  }
  if (std::abs(src.axis.norm() - 1.0) > 1e-9) {
    throw PreconditionError("evaluate_source: dipole axis must be a unit vector");
  }
  const double cos_psi = src.axis.dot(d) / rho;  // P_1(t) = t
  return spherical_hankel_1_1(src.wave_number * rho) * cos_psi;
}

CVec3 source_gradient(const PointSource& src, const Vec3& y) {
  if (src.kind == SourceKind::monopole) {
    // gradient in y of Phi(y, x0) equals grad_x Phi at (y, x0)
    return fundamental_solution_grad_x(y, src.location, src.wave_number);
  }
  const Vec3 d = y - src.location;
  const double rho = d.norm();
  if (rho <= 0.0) {
    throw DomainError("source_gradient: evaluation at the singular point");
  }
  const double k = src.wave_number;
  const double z = k * rho;
  const Vec3 rhat = d / rho;
  const double cos_psi = src.axis.dot(rhat);
  const cplx h1 = spherical_hankel_1_1(z);
  // h_1' = h_0 - (2/z) h_1
  const cplx h1p = spherical_hankel_1_0(z) - 2.0 / z * h1;
  // grad[ h_1(k rho) cos(psi) ] = k h_1' cos(psi) rhat + h_1 (axis - cos(psi) rhat)/rho
  const Vec3 tang = (src.axis - cos_psi * rhat) / rho;
  return (k * h1p * cos_psi) * rhat.cast<cplx>() + h1 * tang.cast<cplx>();
}

cplx evaluate_plane_wave(const PlaneWave& pw, const Vec3& x) {
  return std::polar(1.0, pw.wave_number * pw.direction.dot(x));
}

CVec3 plane_wave_gradient(const PlaneWave& pw, const Vec3& x) {
  const cplx v = kImag * pw.wave_number * evaluate_plane_wave(pw, x);
  return v * pw.direction.cast<cplx>();
}

std::vector<cplx> spherical_jn_complex(int n_max, cplx z) {
  std::vector<cplx> j(n_max + 1);
  const double az = std::abs(z);
  if (az < 1e-8) {
    // series limit j_n(z) ~ z^n / (2n+1)!!
    cplx zn = 1.0;
    double dfact = 1.0;
    for (int n = 0; n <= n_max; ++n) {
      j[n] = zn / dfact;
      zn *= z;
      dfact *= 2.0 * n + 3.0;
    }
    return j;
  }
  const int m_start = n_max + 16 + static_cast<int>(az);
  cplx fp = 0.0;    // f_{m+1}
  cplx fc = 1e-30;  // f_m, arbitrary small seed
  std::vector<cplx> raw(n_max + 1);
  for (int m = m_start; m >= 1; --m) {
    if (m <= n_max) raw[m] = fc;
    const cplx fm1 = (2.0 * m + 1.0) / z * fc - fp;  // f_{m-1}
    fp = fc;
    fc = fm1;
  }
  raw[0] = fc;
  // normalize against j_0 = sin(z)/z (fall back to j_1 near zeros of sin)
  const cplx j0 = std::sin(z) / z;
  cplx scale;
  if (std::abs(j0) > 1e-12) {
    scale = j0 / raw[0];
  } else {
    const cplx j1 = std::sin(z) / (z * z) - std::cos(z) / z;
    scale = j1 / raw[1];
  }
  for (int n = 0; n <= n_max; ++n) j[n] = raw[n] * scale;
  return j;
}

namespace {

// Legendre P_0..P_N(t) by the three-term recurrence; local to the oracle.
std::vector<double> legendre_all(int n_max, double t) {
  std::vector<double> p(n_max + 1);
  p[0] = 1.0;
  if (n_max >= 1) p[1] = t;
  for (int n = 1; n < n_max; ++n) {
    p[n + 1] = ((2.0 * n + 1.0) * t * p[n] - n * p[n - 1]) / (n + 1.0);
  }
  return p;
}

}  // namespace

MieFarField mie_oracle(MieKind kind, double radius, cplx contrast, double kappa0,
                       const Vec3& theta, const std::vector<Vec3>& obs_dirs,
                       int n_terms) {
  if (radius <= 0.0 || kappa0 <= 0.0) {
    throw PreconditionError("mie_oracle: radius and kappa0 must be positive");
  }
  const double ka = kappa0 * radius;
  int N = n_terms;
  if (N == 0) {
    N = static_cast<int>(std::ceil(ka)) + 20;
  } else if (N < ka + 10.0) {
    throw PreconditionError("mie_oracle: n_terms must be at least kappa0*radius + 10");
  }

  // partial-wave coefficients b_n such that A = (-i/k) sum (2n+1) b_n P_n(cos gamma)
  std::vector<cplx> b(N + 1);
  std::vector<double> jn(N + 2), yn(N + 2);
  for (int n = 0; n <= N + 1; ++n) {
    jn[n] = std::sph_bessel(static_cast<unsigned>(n), ka);
    yn[n] = std::sph_neumann(static_cast<unsigned>(n), ka);
  }
  auto jp = [&](int n) {  // j_n'(ka) = j_{n-1} - (n+1)/ka * j_n, j_{-1} = cos(z)/z
    const double jm1 = (n == 0) ? std::cos(ka) / ka : jn[n - 1];
    return jm1 - (n + 1.0) / ka * jn[n];
  };
  auto hp = [&](int n) {
    // h_{-1}(z) = cos(z)/z + i sin(z)/z = e^{iz}/z
    const cplx hm1 = (n == 0) ? cplx(std::cos(ka) / ka, std::sin(ka) / ka)
                              : cplx(jn[n - 1], yn[n - 1]);
    return hm1 - (n + 1.0) / ka * cplx(jn[n], yn[n]);
  };

  if (kind == MieKind::soft_sphere) {
    for (int n = 0; n <= N; ++n) {
      const cplx hn(jn[n], yn[n]);
      b[n] = -jn[n] / hn;  // matches A = (i/k) sum (2n+1) (j_n/h_n) P_n
    }
  } else {
    const cplx q = 1.0 - contrast;
    const cplx k1 = kappa0 * std::sqrt(q);
    if (std::abs(contrast) == 0.0) {
      // no scatterer; leave b at zero
    } else {
      const cplx z1 = k1 * radius;
      auto j1v = spherical_jn_complex(N + 1, z1);
      auto j1p = [&](int n) {
        const cplx jm1 = (n == 0) ? std::cos(z1) / z1 : j1v[n - 1];
        return jm1 - (n + 1.0) / z1 * j1v[n];
      };
      for (int n = 0; n <= N; ++n) {
        const cplx hn(jn[n], yn[n]);
        const cplx num = k1 * j1p(n) * jn[n] - kappa0 * jp(n) * j1v[n];
        const cplx den = k1 * j1p(n) * hn - kappa0 * hp(n) * j1v[n];
        b[n] = -num / den;
      }
    }
  }

  // tail test: last coefficient magnitude relative to the largest one
  double cmax = 0.0;
  for (int n = 0; n <= N; ++n) cmax = std::max(cmax, std::abs((2.0 * n + 1.0) * b[n]));
  MieFarField out;
  if (cmax > 0.0 && std::abs((2.0 * N + 1.0) * b[N]) / cmax > 1e-10) {
    out.warnings.push_back("mie_oracle: series tail ratio above 1e-10 at n_terms=" +
                           std::to_string(N) + "; increase n_terms");
  }

  const Vec3 th = theta.normalized();
  out.values.reserve(obs_dirs.size());
  for (const Vec3& xh : obs_dirs) {
    const double c = std::clamp(xh.normalized().dot(th), -1.0, 1.0);
    const auto P = legendre_all(N, c);
    cplx s = 0.0;
    for (int n = 0; n <= N; ++n) s += (2.0 * n + 1.0) * b[n] * P[n];
    out.values.push_back(-kImag / kappa0 * s);
  }
  return out;
}

}  // namespace pscat
