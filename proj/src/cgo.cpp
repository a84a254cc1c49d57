#include "pscat/cgo.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pscat/grids.hpp"

namespace pscat {

namespace {

cplx cdot(const CVec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

cplx cdotc(const CVec3& a, const CVec3& b) {  // bilinear, no conjugation
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

cplx exp_i(const cplx& z) { return std::exp(kImag * z); }

Vec3 mirror_y(const Vec3& y, double c) { return Vec3(y[0], y[1], 2.0 * c - y[2]); }

}  // namespace

PlaneFrame plane_frame(const PlanarContact& contact) {
  Vec3 n = contact.plane_normal.normalized();
  Vec3 helper = std::abs(n[2]) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  Vec3 t1 = n.cross(helper).normalized();
  Vec3 t2 = n.cross(t1);  // t1 x t2 = n, so det(U) = +1
  PlaneFrame fr;
  fr.U.col(0) = t1;
  fr.U.col(1) = t2;
  fr.U.col(2) = n;
  fr.offset = n.dot(contact.plane_point);
  return fr;
}

CGOPhase build_phase(const Vec3& xi, double tau,
                     const std::optional<PlanarContact>& contact) {
  if (!(tau > 0.0)) throw PreconditionError("build_phase: tau must be positive");
  const double xi1e = std::hypot(xi[0], xi[1]);
  if (xi1e <= 1e-9 * std::max(1.0, xi.norm()))
    throw PreconditionError(
        "build_phase: in-plane part of the frequency vanishes (outside the admissible set)");

  CGOPhase ph;
  ph.xi = xi;
  ph.tau = tau;
  ph.e1 = Vec3(xi[0], xi[1], 0.0) / xi1e;
  ph.e3 = Vec3::UnitZ();
  ph.e2 = ph.e3.cross(ph.e1);

  const double xin = xi.norm();
  const double b = xin * std::sqrt(0.25 + tau * tau);
  const double a1 = 0.5 * xi1e - tau * xi[2];
  const double a2 = 0.5 * xi1e + tau * xi[2];
  const double c1 = 0.5 * xi[2] + tau * xi1e;
  const double c2 = 0.5 * xi[2] - tau * xi1e;

  auto combine = [&](double ae, double be, double ce) {
    CVec3 z;
    for (int k = 0; k < 3; ++k)
      z[k] = cplx(ae * ph.e1[k] + ce * ph.e3[k], be * ph.e2[k]);
    return z;
  };
  ph.zeta1 = combine(a1, b, c1);
  ph.zeta1_star = combine(a1, b, -c1);
  ph.zeta2 = combine(a2, -b, c2);
  ph.zeta2_star = combine(a2, -b, -c2);

  if (contact) {
    PlaneFrame fr = plane_frame(*contact);
    ph.U = fr.U;
    ph.plane_offset = fr.offset;
    ph.has_contact = true;
  }
  return ph;
}

bool unitary_conjugate_check(const CGOPhase& phase, const Eigen::Matrix3d& U) {
  Eigen::Matrix3d gram = U.transpose() * U - Eigen::Matrix3d::Identity();
  if (gram.cwiseAbs().maxCoeff() > 1e-12)
    throw PreconditionError("unitary_conjugate_check: matrix is not orthogonal");
  Eigen::Matrix3cd Uc = U.cast<cplx>();
  for (const CVec3* z : {&phase.zeta1, &phase.zeta1_star, &phase.zeta2, &phase.zeta2_star}) {
    CVec3 w = Uc * (*z);
    double scale = std::max(1.0, w.squaredNorm());
    if (std::abs(cdotc(w, w)) > 1e-12 * scale) return false;
  }
  return true;
}

CubeGridSpec default_cube(const MediumComponent& component, int n) {
  CubeGridSpec spec;
  spec.n = n;
  const Shape& sh = component.support;
  if (component.contact) {
    PlaneFrame fr = plane_frame(*component.contact);
    Vec3 yc = fr.U.transpose() * sh.center;
    double rho = sh.radius + std::abs(yc[2] - fr.offset);
    spec.center = Vec3(yc[0], yc[1], fr.offset);
    spec.side = 2.2 * 2.0 * rho;
  } else {
    spec.center = sh.center;
    spec.side = 2.2 * 2.0 * sh.radius;
  }
  return spec;
}

ContrastExtension mirror_extend(const MediumComponent& component, const CubeGridSpec& spec) {
  if (!component.contact)
    throw PreconditionError("mirror_extend: component has no planar contact");
  if (spec.n < 2 || spec.n % 2 != 0)
    throw PreconditionError("mirror_extend: cube resolution must be even and positive");

  PlaneFrame fr = plane_frame(*component.contact);
  ContrastExtension ext;
  ext.spec = spec;
  ext.spec.center[2] = fr.offset;  // grid rows must pair across the plane
  ext.U = fr.U;
  ext.plane_offset = fr.offset;
  ext.mirrored = true;

  const Shape& sh = component.support;
  Vec3 yc = fr.U.transpose() * sh.center;
  double rho = sh.radius + std::abs(yc[2] - fr.offset);
  double delta = ext.delta();
  Vec3 lateral_gap = Vec3(yc[0], yc[1], fr.offset) - ext.spec.center;
  double need = rho + lateral_gap.norm() + delta;
  if (need > 0.5 * ext.spec.side) {
    std::ostringstream msg;
    msg << "mirror_extend: cube too small for the mirrored support; need side >= "
        << 2.0 * need << " centered at (" << yc[0] << ", " << yc[1] << ", " << fr.offset
        << ") in rotated coordinates";
    throw NumericsError("coverage", msg.str());
  }
  ext.b0_radius = 1.05 * (rho + lateral_gap.norm());

  const int n = ext.spec.n;
  ext.values.assign(static_cast<std::size_t>(n) * n * n, cplx(0.0, 0.0));
  // Fill the physical side (y3 >= plane) and copy to the mirror rows, so
  // paired values agree bit for bit.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = n / 2; k < n; ++k) {
        Vec3 x = fr.U * ext.node(i, j, k);
        if (!sh.contains(x)) continue;
        cplx v = component.contrast_at(x);
        ext.values[ext.index(i, j, k)] = v;
        if (k > n / 2) ext.values[ext.index(i, j, n - k)] = v;
      }
  return ext;
}

ContrastExtension plain_extend(const MediumComponent& component, int component_index,
                               const CubeGridSpec& spec) {
  if (spec.n < 2) throw PreconditionError("plain_extend: cube resolution must be positive");
  ContrastExtension ext;
  ext.component = component_index;
  ext.spec = spec;
  ext.mirrored = false;

  const Shape& sh = component.support;
  double delta = ext.delta();
  double need = (sh.center - spec.center).norm() + sh.radius + delta;
  if (need > 0.5 * spec.side) {
    std::ostringstream msg;
    msg << "plain_extend: cube too small for the support; need side >= " << 2.0 * need
        << " centered at (" << sh.center[0] << ", " << sh.center[1] << ", " << sh.center[2]
        << ")";
    throw NumericsError("coverage", msg.str());
  }
  ext.b0_radius = 1.05 * ((sh.center - spec.center).norm() + sh.radius);

  const int n = spec.n;
  ext.values.assign(static_cast<std::size_t>(n) * n * n, cplx(0.0, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Vec3 x = ext.node(i, j, k);
        if (sh.contains(x)) ext.values[ext.index(i, j, k)] = component.contrast_at(x);
      }
  return ext;
}

namespace {

struct FftHolder {
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  explicit FftHolder(int n) {
    std::size_t total = static_cast<std::size_t>(n) * n * n;
    buf = fftw_alloc_complex(total);
    fwd = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftHolder() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
  }
  FftHolder(const FftHolder&) = delete;
  FftHolder& operator=(const FftHolder&) = delete;
};

// Central-difference residual of the remainder equation at interior nodes,
// relative to the forcing norm. Shared by solve_remainder and reflected_pair.
void remainder_fd_residual(const ContrastExtension& ext, const CVec3& zeta, double kappa0,
                           const std::vector<cplx>& omega, std::vector<cplx>* field,
                           double* rel, double* forcing_norm) {
  const int n = ext.spec.n;
  const double d = ext.delta();
  const double k2 = kappa0 * kappa0;
  auto idx = [n](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * n + j) * static_cast<std::size_t>(n) + k;
  };
  if (field) field->assign(omega.size(), cplx(0.0, 0.0));
  double num2 = 0.0, den2 = 0.0;
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j)
      for (int k = 1; k < n - 1; ++k) {
        std::size_t c = idx(i, j, k);
        cplx w0 = omega[c];
        cplx lap = (omega[idx(i + 1, j, k)] + omega[idx(i - 1, j, k)] +
                    omega[idx(i, j + 1, k)] + omega[idx(i, j - 1, k)] +
                    omega[idx(i, j, k + 1)] + omega[idx(i, j, k - 1)] - 6.0 * w0) /
                   (d * d);
        CVec3 grad;
        grad[0] = (omega[idx(i + 1, j, k)] - omega[idx(i - 1, j, k)]) / (2.0 * d);
        grad[1] = (omega[idx(i, j + 1, k)] - omega[idx(i, j - 1, k)]) / (2.0 * d);
        grad[2] = (omega[idx(i, j, k + 1)] - omega[idx(i, j, k - 1)]) / (2.0 * d);
        cplx forcing = k2 * ext.values[c] * (1.0 + w0);
        cplx r = lap + 2.0 * kImag * cdotc(zeta, grad) + forcing;
        if (field) (*field)[c] = r;
        num2 += std::norm(r);
        den2 += std::norm(forcing);
      }
  *forcing_norm = std::sqrt(den2);
  *rel = den2 > 0.0 ? std::sqrt(num2) / std::sqrt(den2) : 0.0;
}

}  // namespace

CGOSolutionPair solve_remainder(const ContrastExtension& ext, const CGOPhase& phase,
                                int zeta_index, double kappa0) {
  if (zeta_index != 1 && zeta_index != 2)
    throw PreconditionError("solve_remainder: zeta_index must be 1 or 2");
  const int n = ext.spec.n;
  if (n < 32) throw PreconditionError("solve_remainder: cube resolution below 32 per axis");
  if (n % 2 != 0) throw PreconditionError("solve_remainder: cube resolution must be even");
  if (ext.mirrored != phase.has_contact ||
      (phase.U - ext.U).cwiseAbs().maxCoeff() > 1e-12 ||
      std::abs(phase.plane_offset - ext.plane_offset) > 1e-12)
    throw PreconditionError("solve_remainder: phase frame does not match the extension frame");

  const CVec3 zeta = zeta_index == 1 ? phase.zeta1 : phase.zeta2;
  const double L = ext.spec.side;
  const double two_pi_over_L = 2.0 * kPi / L;
  const std::size_t total = static_cast<std::size_t>(n) * n * n;

  // Shifted lattice keeps the symbol |k|^2 + 2 zeta.k away from zero; the
  // shift acts as a pure index-space modulation so no base-point phases enter.
  static const Vec3 kSigmaList[] = {
      Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.0, 0.0), Vec3(0.0, 0.5, 0.0),
      Vec3(0.0, 0.0, 0.5), Vec3(0.25, 0.25, 0.25)};
  std::vector<cplx> symbol(total);
  Vec3 sigma = Vec3::Zero();
  bool found = false;
  const double floor_s = 1e-6 * std::max(1.0, zeta.norm());
  for (const Vec3& cand : kSigmaList) {
    double smin = std::numeric_limits<double>::max();
    for (int i = 0; i < n && smin > 0.0; ++i) {
      double k1 = two_pi_over_L * ((i <= n / 2 - 1 ? i : i - n) + cand[0]);
      for (int j = 0; j < n; ++j) {
        double k2f = two_pi_over_L * ((j <= n / 2 - 1 ? j : j - n) + cand[1]);
        for (int k = 0; k < n; ++k) {
          double k3 = two_pi_over_L * ((k <= n / 2 - 1 ? k : k - n) + cand[2]);
          cplx s = k1 * k1 + k2f * k2f + k3 * k3 +
                   2.0 * (zeta[0] * k1 + zeta[1] * k2f + zeta[2] * k3);
          symbol[(static_cast<std::size_t>(i) * n + j) * n + k] = s;
          smin = std::min(smin, std::abs(s));
        }
      }
    }
    if (smin >= floor_s) {
      sigma = cand;
      found = true;
      break;
    }
  }
  if (!found)
    throw NumericsError("symbol_zero",
                        "solve_remainder: every lattice shift left a vanishing symbol");

  // Per-axis index-space modulation for the shift.
  std::vector<cplx> mod1(n), mod2(n), mod3(n);
  for (int i = 0; i < n; ++i) {
    mod1[i] = exp_i(cplx(-2.0 * kPi * sigma[0] * i / n, 0.0));
    mod2[i] = exp_i(cplx(-2.0 * kPi * sigma[1] * i / n, 0.0));
    mod3[i] = exp_i(cplx(-2.0 * kPi * sigma[2] * i / n, 0.0));
  }

  FftHolder fft(n);
  const double k2 = kappa0 * kappa0;
  std::vector<cplx> omega(total, cplx(0.0, 0.0));
  std::vector<cplx> omega_new(total);

  int iterations = 0;
  double prev_rel = std::numeric_limits<double>::max();
  int growth_streak = 0;
  bool converged = false;
  for (int it = 1; it <= 200; ++it) {
    iterations = it;
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx mij = mod1[i] * mod2[j];
        for (int k = 0; k < n; ++k, ++idx) {
          cplx f = k2 * ext.values[idx] * (1.0 + omega[idx]);
          cplx g = f * mij * mod3[k];
          fft.buf[idx][0] = g.real();
          fft.buf[idx][1] = g.imag();
        }
      }
    fftw_execute(fft.fwd);
    for (std::size_t m = 0; m < total; ++m) {
      cplx ghat(fft.buf[m][0], fft.buf[m][1]);
      cplx c = ghat / symbol[m];
      fft.buf[m][0] = c.real();
      fft.buf[m][1] = c.imag();
    }
    fftw_execute(fft.bwd);
    idx = 0;
    double change2 = 0.0, norm2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx mij = std::conj(mod1[i] * mod2[j]);
        for (int k = 0; k < n; ++k, ++idx) {
          cplx w(fft.buf[idx][0], fft.buf[idx][1]);
          cplx v = w * mij * std::conj(mod3[k]) / static_cast<double>(total);
          omega_new[idx] = v;
          change2 += std::norm(v - omega[idx]);
          norm2 += std::norm(v);
        }
      }
    omega.swap(omega_new);
    double norm = std::sqrt(norm2);
    if (norm > 1e12)
      throw NumericsError("divergence",
                          "solve_remainder: remainder norm blew up; increase tau or reduce "
                          "the contrast");
    double rel = std::sqrt(change2) / std::max(norm, 1e-300);
    if (norm == 0.0 || rel <= 1e-6) {
      converged = true;
      break;
    }
    growth_streak = rel > prev_rel ? growth_streak + 1 : 0;
    if (it >= 6 && growth_streak >= 3 && rel > 1e-3)
      throw NumericsError("divergence",
                          "solve_remainder: fixed point is not contracting; increase tau or "
                          "reduce the contrast");
    prev_rel = rel;
  }
  if (!converged)
    throw NumericsError("divergence",
                        "solve_remainder: no convergence within 200 sweeps; increase tau or "
                        "reduce the contrast");

  CGOSolutionPair sol;
  sol.phase = phase;
  sol.zeta_index = zeta_index;
  sol.ext = ext;
  sol.kappa0 = kappa0;
  sol.omega = std::move(omega);
  sol.sigma_shift = sigma;
  sol.iterations = iterations;

  const double d = ext.delta();
  double l2 = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        Vec3 rel_pos = d * Vec3(i - n / 2, j - n / 2, k - n / 2);
        if (rel_pos.norm() <= ext.b0_radius) l2 += std::norm(sol.omega[idx]);
      }
  sol.omega_l2_b0 = std::sqrt(l2 * d * d * d);

  double forcing = 0.0;
  remainder_fd_residual(ext, zeta, kappa0, sol.omega, nullptr, &sol.fd_residual, &forcing);
  return sol;
}

CGOSolutionPair reflected_pair(CGOSolutionPair sol) {
  if (!sol.ext.mirrored)
    throw PreconditionError("reflected_pair: extension grid is not mirror-symmetric");
  const int n = sol.ext.spec.n;
  const std::size_t total = sol.omega.size();
  const CVec3 zeta = sol.zeta_index == 1 ? sol.phase.zeta1 : sol.phase.zeta2;

  std::vector<cplx> u(total);
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx)
        u[idx] = exp_i(cdot(zeta, sol.ext.node(i, j, k))) * (1.0 + sol.omega[idx]);

  // Row k = 0 has its mirror one period above the grid top; the shifted
  // lattice makes the wrap factor exp(2 pi i sigma3) exact.
  const double L = sol.ext.spec.side;
  cplx wrap = exp_i(cplx(2.0 * kPi * sol.sigma_shift[2], 0.0));
  sol.psi.assign(total, cplx(0.0, 0.0));
  auto at = [n](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * n + j) * static_cast<std::size_t>(n) + k;
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 1; k < n; ++k)
        sol.psi[at(i, j, k)] = u[at(i, j, k)] - u[at(i, j, n - k)];
      Vec3 phantom = sol.ext.node(i, j, 0) + Vec3(0.0, 0.0, L);
      cplx u_phantom = exp_i(cdot(zeta, phantom)) * (1.0 + wrap * sol.omega[at(i, j, 0)]);
      sol.psi[at(i, j, 0)] = u[at(i, j, 0)] - u_phantom;
    }

  std::vector<cplx> rfield;
  double rel = 0.0, forcing = 0.0;
  remainder_fd_residual(sol.ext, zeta, sol.kappa0, sol.omega, &rfield, &rel, &forcing);
  double num2 = 0.0;
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j)
      for (int k = 2; k < n - 1; ++k)
        num2 += std::norm(rfield[at(i, j, k)] - rfield[at(i, j, n - k)]);
  sol.psi_fd_residual = forcing > 0.0 ? std::sqrt(num2) / forcing : 0.0;
  return sol;
}

cplx remainder_at(const CGOSolutionPair& sol, const Vec3& y) {
  const int n = sol.ext.spec.n;
  const double d = sol.ext.delta();
  Vec3 base = sol.ext.node(0, 0, 0);
  Vec3 t = (y - base) / d;
  int i0 = std::clamp(static_cast<int>(std::floor(t[0])), 0, n - 2);
  int j0 = std::clamp(static_cast<int>(std::floor(t[1])), 0, n - 2);
  int k0 = std::clamp(static_cast<int>(std::floor(t[2])), 0, n - 2);
  double fx = std::clamp(t[0] - i0, 0.0, 1.0);
  double fy = std::clamp(t[1] - j0, 0.0, 1.0);
  double fz = std::clamp(t[2] - k0, 0.0, 1.0);
  auto at = [&](int i, int j, int k) { return sol.omega[sol.ext.index(i, j, k)]; };
  cplx c00 = at(i0, j0, k0) * (1.0 - fz) + at(i0, j0, k0 + 1) * fz;
  cplx c01 = at(i0, j0 + 1, k0) * (1.0 - fz) + at(i0, j0 + 1, k0 + 1) * fz;
  cplx c10 = at(i0 + 1, j0, k0) * (1.0 - fz) + at(i0 + 1, j0, k0 + 1) * fz;
  cplx c11 = at(i0 + 1, j0 + 1, k0) * (1.0 - fz) + at(i0 + 1, j0 + 1, k0 + 1) * fz;
  return (c00 * (1.0 - fy) + c01 * fy) * (1.0 - fx) + (c10 * (1.0 - fy) + c11 * fy) * fx;
}

cplx cgo_value(const CGOSolutionPair& sol, const Vec3& y) {
  const CVec3 zeta = sol.zeta_index == 1 ? sol.phase.zeta1 : sol.phase.zeta2;
  return exp_i(cdot(zeta, y)) * (1.0 + remainder_at(sol, y));
}

cplx reflected_value(const CGOSolutionPair& sol, const Vec3& y) {
  return cgo_value(sol, y) - cgo_value(sol, mirror_y(y, sol.ext.plane_offset));
}

double product_expansion_check(const CGOSolutionPair& pair1, const CGOSolutionPair& pair2,
                               int n_samples, unsigned long long seed) {
  if (pair1.zeta_index != 1 || pair2.zeta_index != 2)
    throw PreconditionError("product_expansion_check: need the zeta1 and zeta2 pair, in order");
  const CGOPhase& p1 = pair1.phase;
  const CGOPhase& p2 = pair2.phase;
  if ((p1.xi - p2.xi).norm() > 1e-12 || std::abs(p1.tau - p2.tau) > 1e-12 ||
      (p1.U - p2.U).cwiseAbs().maxCoeff() > 1e-12 ||
      std::abs(p1.plane_offset - p2.plane_offset) > 1e-12)
    throw PreconditionError("product_expansion_check: pairs built from different phases");
  if (pair1.ext.spec.n != pair2.ext.spec.n ||
      std::abs(pair1.ext.spec.side - pair2.ext.spec.side) > 1e-12 ||
      (pair1.ext.spec.center - pair2.ext.spec.center).norm() > 1e-12)
    throw PreconditionError("product_expansion_check: pairs live on different grids");
  if (!pair1.ext.mirrored || !pair2.ext.mirrored)
    throw PreconditionError("product_expansion_check: pairs must be mirrored extensions");

  const double c = pair1.ext.plane_offset;
  const Vec3 two_c(0.0, 0.0, 2.0 * c);
  const double d = pair1.ext.delta();
  const int n = pair1.ext.spec.n;
  const double r_s = std::min(pair1.ext.b0_radius, (0.5 * n - 1.5) * d);
  const Vec3 ctr = pair1.ext.spec.center;

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Vec3 y;
    do {
      y = ctr + r_s * Vec3(unit(rng), unit(rng), unit(rng));
    } while ((y - ctr).norm() > r_s);
    Vec3 yt = mirror_y(y, c);

    cplx w1y = 1.0 + remainder_at(pair1, y), w1t = 1.0 + remainder_at(pair1, yt);
    cplx w2y = 1.0 + remainder_at(pair2, y), w2t = 1.0 + remainder_at(pair2, yt);

    cplx psi1 = exp_i(cdot(p1.zeta1, y)) * w1y - exp_i(cdot(p1.zeta1, yt)) * w1t;
    cplx psi2 = exp_i(cdot(p2.zeta2, y)) * w2y - exp_i(cdot(p2.zeta2, yt)) * w2t;
    cplx lhs = psi1 * psi2;

    cplx t1 = exp_i(cplx(p1.xi.dot(y), 0.0)) * w1y * w2y;
    cplx t2 = exp_i(cplx(p1.xi.dot(yt), 0.0)) * w1t * w2t;
    CVec3 cross1 = p1.zeta1 + p2.zeta2_star;
    CVec3 cross2 = p1.zeta1_star + p2.zeta2;
    cplx t3 = exp_i(cdot(cross1, y)) * exp_i(cdot(p2.zeta2, two_c)) * w1y * w2t;
    cplx t4 = exp_i(cdot(cross2, y)) * exp_i(cdot(p1.zeta1, two_c)) * w1t * w2y;
    cplx rhs = t1 + t2 - t3 - t4;

    double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

namespace {

// Slab-by-slab rule over a sphere cut by the contact plane, in rotated
// coordinates: GL panels along y3 sized to the carrier frequency, GL in the
// slab radius, uniform angle.
template <class F>
cplx integrate_contacted(const Shape& support, const PlaneFrame& fr, double carrier_freq,
                         F&& f_y) {
  Vec3 yc = fr.U.transpose() * support.center;
  double R = support.radius;
  double lo = std::max(fr.offset, yc[2] - R);
  double hi = yc[2] + R;
  if (hi <= lo) return cplx(0.0, 0.0);

  double phase_total = std::abs(carrier_freq) * (hi - lo);
  int n_panels = std::max(3, static_cast<int>(std::ceil(phase_total / 8.0)));
  const int gl_pts = 12, nr = 24, nphi = 24;
  std::vector<double> x3, w3, xr, wr;
  const double dphi = 2.0 * kPi / nphi;

  cplx acc(0.0, 0.0);
  for (int p = 0; p < n_panels; ++p) {
    double a = lo + (hi - lo) * p / n_panels;
    double b = lo + (hi - lo) * (p + 1) / n_panels;
    gauss_legendre(gl_pts, a, b, x3, w3);
    for (int i3 = 0; i3 < gl_pts; ++i3) {
      double y3 = x3[i3];
      double r2 = R * R - (y3 - yc[2]) * (y3 - yc[2]);
      if (r2 <= 0.0) continue;
      double rmax = std::sqrt(r2);
      gauss_legendre(nr, 0.0, rmax, xr, wr);
      for (int ir = 0; ir < nr; ++ir)
        for (int ip = 0; ip < nphi; ++ip) {
          double phi = dphi * (ip + 0.5);
          Vec3 y(yc[0] + xr[ir] * std::cos(phi), yc[1] + xr[ir] * std::sin(phi), y3);
          acc += w3[i3] * wr[ir] * xr[ir] * dphi * f_y(y);
        }
    }
  }
  return acc;
}

template <class F>
cplx integrate_ball(const Shape& ball, F&& f_x) {
  const int nr = 24, nmu = 24, nphi = 24;
  std::vector<double> xr, wr, xmu, wmu;
  gauss_legendre(nr, 0.0, ball.radius, xr, wr);
  gauss_legendre(nmu, -1.0, 1.0, xmu, wmu);
  const double dphi = 2.0 * kPi / nphi;
  cplx acc(0.0, 0.0);
  for (int ir = 0; ir < nr; ++ir)
    for (int im = 0; im < nmu; ++im) {
      double s = std::sqrt(1.0 - xmu[im] * xmu[im]);
      for (int ip = 0; ip < nphi; ++ip) {
        double phi = dphi * (ip + 0.5);
        Vec3 x = ball.center + xr[ir] * Vec3(s * std::cos(phi), s * std::sin(phi), xmu[im]);
        acc += wr[ir] * xr[ir] * xr[ir] * wmu[im] * dphi * f_x(x);
      }
    }
  return acc;
}

void require_matching_scenes(const SceneC& scene_q, const SceneC& scene_qt) {
  if (scene_q.media.size() != scene_qt.media.size())
    throw PreconditionError("fourier_identity_run: scenes have different component counts");
  for (std::size_t l = 0; l < scene_q.media.size(); ++l) {
    const MediumComponent& a = scene_q.media[l];
    const MediumComponent& b = scene_qt.media[l];
    bool same = a.support.kind == b.support.kind &&
                (a.support.center - b.support.center).norm() <= 1e-12 &&
                std::abs(a.support.radius - b.support.radius) <= 1e-12 &&
                a.contact.has_value() == b.contact.has_value();
    if (same && a.contact)
      same = (a.contact->plane_point - b.contact->plane_point).norm() <= 1e-12 &&
             (a.contact->plane_normal - b.contact->plane_normal).norm() <= 1e-12;
    if (!same)
      throw PreconditionError(
          "fourier_identity_run: scenes must share supports and contacts, only contrasts "
          "may differ");
  }
}

}  // namespace

FourierIdentityReport fourier_identity_run(const SceneC& scene_q, const SceneC& scene_qt,
                                           const Vec3& eta, const std::vector<double>& tau_list,
                                           int cube_n) {
  require_matching_scenes(scene_q, scene_qt);
  const double kappa0 = scene_q.wave_number;
  const std::size_t n_comp = scene_q.media.size();

  // Admissibility: every contacted component needs an in-plane part of the
  // rotated frequency; detached components need one in the fixed frame.
  std::vector<PlaneFrame> frames(n_comp);
  std::vector<Vec3> xi_of(n_comp);
  for (std::size_t l = 0; l < n_comp; ++l) {
    if (scene_q.media[l].contact) {
      frames[l] = plane_frame(*scene_q.media[l].contact);
      xi_of[l] = frames[l].U.transpose() * eta;
    } else {
      xi_of[l] = eta;
    }
    if (std::hypot(xi_of[l][0], xi_of[l][1]) < 1e-6) {
      std::ostringstream msg;
      msg << "fourier_identity_run: eta lies outside the admissible set for component " << l;
      throw PreconditionError(msg.str());
    }
  }

  FourierIdentityReport rep;
  rep.eta = eta;
  rep.tau_list = tau_list;

  // One panel layout per component, sized for the largest carrier in the
  // list and reused for the reference and every tau, so the slab quadrature
  // bias cancels in each difference.
  double tau_max = 0.0;
  for (double t : tau_list) tau_max = std::max(tau_max, t);
  std::vector<double> carrier_of(n_comp, 0.0);
  for (std::size_t l = 0; l < n_comp; ++l)
    carrier_of[l] = 2.0 * tau_max * std::hypot(xi_of[l][0], xi_of[l][1]);

  // Fourier reference: even mirror extension across each contact plane,
  // identity on detached components.
  for (std::size_t l = 0; l < n_comp; ++l) {
    const MediumComponent& cq = scene_q.media[l];
    const MediumComponent& cqt = scene_qt.media[l];
    auto delta_at = [&](const Vec3& x) { return cqt.contrast_at(x) - cq.contrast_at(x); };
    if (cq.contact) {
      const PlaneFrame& fr = frames[l];
      rep.fourier_reference += integrate_contacted(
          cq.support, fr, carrier_of[l], [&](const Vec3& y) {
        Vec3 x = fr.U * y;
        Vec3 xt = fr.U * mirror_y(y, fr.offset);
        return delta_at(x) * (exp_i(cplx(eta.dot(x), 0.0)) + exp_i(cplx(eta.dot(xt), 0.0)));
      });
    } else {
      rep.fourier_reference += integrate_ball(cq.support, [&](const Vec3& x) {
        return delta_at(x) * exp_i(cplx(eta.dot(x), 0.0));
      });
    }
  }

  // Extensions are tau-independent; build once per component and scene.
  std::vector<ContrastExtension> ext_q(n_comp), ext_qt(n_comp);
  for (std::size_t l = 0; l < n_comp; ++l) {
    CubeGridSpec spec = default_cube(scene_q.media[l], cube_n);
    if (scene_q.media[l].contact) {
      ext_q[l] = mirror_extend(scene_q.media[l], spec);
      ext_qt[l] = mirror_extend(scene_qt.media[l], spec);
    } else {
      ext_q[l] = plain_extend(scene_q.media[l], static_cast<int>(l), spec);
      ext_qt[l] = plain_extend(scene_qt.media[l], static_cast<int>(l), spec);
    }
    ext_q[l].component = static_cast<int>(l);
    ext_qt[l].component = static_cast<int>(l);
  }

  for (double tau : tau_list) {
    cplx total(0.0, 0.0);
    std::string note;
    try {
      for (std::size_t l = 0; l < n_comp; ++l) {
        const MediumComponent& cq = scene_q.media[l];
        const MediumComponent& cqt = scene_qt.media[l];
        auto delta_at = [&](const Vec3& x) { return cqt.contrast_at(x) - cq.contrast_at(x); };
        CGOPhase phase = build_phase(xi_of[l], tau, cq.contact);
        // phi rides the first zeta on the perturbed scene, v the second on
        // the reference scene.
        CGOSolutionPair sol_phi = solve_remainder(ext_qt[l], phase, 1, kappa0);
        CGOSolutionPair sol_v = solve_remainder(ext_q[l], phase, 2, kappa0);
        if (cq.contact) {
          const PlaneFrame& fr = frames[l];
          total += integrate_contacted(
              cq.support, fr, carrier_of[l], [&](const Vec3& y) {
                Vec3 x = fr.U * y;
                return delta_at(x) * reflected_value(sol_phi, y) * reflected_value(sol_v, y);
              });
        } else {
          total += integrate_ball(cq.support, [&](const Vec3& x) {
            return delta_at(x) * cgo_value(sol_phi, x) * cgo_value(sol_v, x);
          });
        }
      }
    } catch (const NumericsError& e) {
      note = std::string(e.code()) + ": " + e.what();
      total = cplx(std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN());
    }
    rep.integrals.push_back(total);
    rep.annotations.push_back(note);
    rep.discrepancy.push_back(std::abs(total - rep.fourier_reference));
  }

  // Richardson step on the last clean doubling, else the last clean value.
  rep.extrapolated_discrepancy = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t b = rep.tau_list.size(); b-- > 0;) {
    if (!rep.annotations[b].empty()) continue;
    rep.extrapolated_discrepancy = rep.discrepancy[b];
    for (std::size_t a = b; a-- > 0;) {
      if (!rep.annotations[a].empty()) continue;
      if (std::abs(rep.tau_list[b] - 2.0 * rep.tau_list[a]) <= 1e-9 * rep.tau_list[b]) {
        cplx i_ext = 2.0 * rep.integrals[b] - rep.integrals[a];
        rep.extrapolated_discrepancy = std::abs(i_ext - rep.fourier_reference);
      }
      break;
    }
    break;
  }
  return rep;
}

}  // namespace pscat
