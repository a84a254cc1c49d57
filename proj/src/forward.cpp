#include "pscat/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pscat {

cplx incident_value(const IncidentField& inc, const Vec3& x) {
  if (std::holds_alternative<PlaneWave>(inc))
    return evaluate_plane_wave(std::get<PlaneWave>(inc), x);
  return evaluate_source(std::get<PointSource>(inc), x);
}

CVec3 incident_gradient(const IncidentField& inc, const Vec3& x) {
  if (std::holds_alternative<PlaneWave>(inc))
    return plane_wave_gradient(std::get<PlaneWave>(inc), x);
  return source_gradient(std::get<PointSource>(inc), x);
}

double incident_wave_number(const IncidentField& inc) {
  if (std::holds_alternative<PlaneWave>(inc)) return std::get<PlaneWave>(inc).wave_number;
  return std::get<PointSource>(inc).wave_number;
}

std::vector<cplx> incident_at_cells(const VolumeGrid& grid, const IncidentField& inc) {
  std::vector<cplx> ui(grid.size());
  const bool averaged = grid.layout == VolumeGrid::Layout::cartesian &&
                        std::holds_alternative<PointSource>(inc);
  const Vec3 src = averaged ? std::get<PointSource>(inc).location : Vec3::Zero();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Vec3& y = grid.cells[j];
    if (averaged && (y - src).norm() < 3.0 * grid.h) {
      cplx acc(0.0, 0.0);
      const double sub = grid.h / 4.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c) {
            const Vec3 ys = y + sub * Vec3(a - 1.5, b - 1.5, c - 1.5);
            acc += incident_value(inc, ys);
          }
      ui[j] = acc / 64.0;
    } else {
      ui[j] = incident_value(inc, y);
    }
  }
  return ui;
}

DiscreteScene::DiscreteScene(SceneC scene, BoundaryGrid boundary, VolumeGrid volume,
                             SolverOptions options)
    : scene_(std::move(scene)),
      boundary_(std::move(boundary)),
      volume_(std::move(volume)),
      options_(options) {
  if (scene_.wave_number <= 0.0)
    throw PreconditionError("DiscreteScene: wave number must be positive");
  layer_diag_ = layer_diagonals(boundary_, scene_.wave_number);
  volume_diag_ = volume_diagonals(volume_, scene_.wave_number);
}

namespace {

cplx combined_kernel(const Vec3& x, const Vec3& node, const Vec3& normal, double kappa) {
  return dl_point(x, node, normal, kappa) + kImag * kappa * sl_point(x, node, kappa);
}

}  // namespace

Eigen::VectorXcd DiscreteScene::apply_operator(const Eigen::VectorXcd& v) const {
  const std::size_t V = volume_.size();
  const std::size_t B = boundary_.size();
  const double kappa = scene_.wave_number;
  const double k2 = kappa * kappa;
  Eigen::VectorXcd out(V + B);
  for (std::size_t i = 0; i < V; ++i) {
    cplx acc = v[i] + volume_diag_[i] * v[i];
    for (std::size_t j = 0; j < V; ++j) {
      if (j == i) continue;
      acc += k2 * volume_.weights[j] * volume_.contrast[j] *
             fundamental_solution(volume_.cells[i], volume_.cells[j], kappa) * v[j];
    }
    for (std::size_t b = 0; b < B; ++b)
      acc -= boundary_.weights[b] *
             combined_kernel(volume_.cells[i], boundary_.nodes[b], boundary_.normals[b], kappa) *
             v[V + b];
    out[i] = acc;
  }
  for (std::size_t b = 0; b < B; ++b) {
    cplx acc = (1.0 + 2.0 * (layer_diag_.dl[b] + kImag * kappa * layer_diag_.sl[b])) * v[V + b];
    for (std::size_t c = 0; c < B; ++c) {
      if (c == b) continue;
      acc += 2.0 * boundary_.weights[c] *
             combined_kernel(boundary_.nodes[b], boundary_.nodes[c], boundary_.normals[c], kappa) *
             v[V + c];
    }
    for (std::size_t j = 0; j < V; ++j)
      acc -= 2.0 * k2 * volume_.weights[j] * volume_.contrast[j] *
             fundamental_solution(boundary_.nodes[b], volume_.cells[j], kappa) * v[j];
    out[V + b] = acc;
  }
  return out;
}

void DiscreteScene::ensure_factorization() const {
  if (lu_) return;
  const std::size_t V = volume_.size();
  const std::size_t B = boundary_.size();
  const std::size_t N = V + B;
  const double kappa = scene_.wave_number;
  const double k2 = kappa * kappa;
  Eigen::MatrixXcd A(N, N);
  for (std::size_t i = 0; i < V; ++i) {
    for (std::size_t j = 0; j < V; ++j)
      A(i, j) = (j == i) ? 1.0 + volume_diag_[i]
                         : k2 * volume_.weights[j] * volume_.contrast[j] *
                               fundamental_solution(volume_.cells[i], volume_.cells[j], kappa);
    for (std::size_t b = 0; b < B; ++b)
      A(i, V + b) = -boundary_.weights[b] *
                    combined_kernel(volume_.cells[i], boundary_.nodes[b], boundary_.normals[b],
                                    kappa);
  }
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < V; ++j)
      A(V + b, j) = -2.0 * k2 * volume_.weights[j] * volume_.contrast[j] *
                    fundamental_solution(boundary_.nodes[b], volume_.cells[j], kappa);
    for (std::size_t c = 0; c < B; ++c)
      A(V + b, V + c) =
          (c == b) ? 1.0 + 2.0 * (layer_diag_.dl[b] + kImag * kappa * layer_diag_.sl[b])
                   : 2.0 * boundary_.weights[c] *
                         combined_kernel(boundary_.nodes[b], boundary_.nodes[c],
                                         boundary_.normals[c], kappa);
  }
  lu_.emplace(A);
}

Eigen::VectorXcd DiscreteScene::run_gmres(const Eigen::VectorXcd& rhs, int* iterations) const {
  const std::size_t N = rhs.size();
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    if (iterations) *iterations = 0;
    return Eigen::VectorXcd::Zero(N);
  }

  const int m = options_.max_iterations;
  std::vector<Eigen::VectorXcd> basis;
  basis.reserve(m + 1);
  basis.push_back(rhs / bnorm);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  std::vector<cplx> cs(m), sn(m);
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
  g[0] = bnorm;
  std::vector<double> history;

  int k = 0;
  for (; k < m; ++k) {
    Eigen::VectorXcd w = apply_operator(basis[k]);
    for (int j = 0; j <= k; ++j) {  // modified Gram-Schmidt
      H(j, k) = basis[j].dot(w);
      w -= H(j, k) * basis[j];
    }
    const double hnorm = w.norm();
    for (int j = 0; j < k; ++j) {
      const cplx t = std::conj(cs[j]) * H(j, k) + std::conj(sn[j]) * H(j + 1, k);
      H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
      H(j, k) = t;
    }
    const double denom = std::sqrt(std::norm(H(k, k)) + hnorm * hnorm);
    cs[k] = H(k, k) / denom;
    sn[k] = hnorm / denom;
    H(k, k) = std::conj(cs[k]) * H(k, k) + std::conj(sn[k]) * hnorm;
    g[k + 1] = -sn[k] * g[k];
    g[k] = std::conj(cs[k]) * g[k];
    const double res = std::abs(g[k + 1]) / bnorm;
    history.push_back(res);
    if (res < options_.tolerance) {
      ++k;
      break;
    }
    if (hnorm < 1e-300) break;  // Krylov space exhausted
    basis.push_back(w / hnorm);
  }

  if (history.empty() || history.back() >= options_.tolerance)
    throw ConvergenceError("iterative solve stalled before reaching tolerance", history);
  if (iterations) *iterations = k;

  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(k);
  for (int i = k - 1; i >= 0; --i) {
    cplx acc = g[i];
    for (int j = i + 1; j < k; ++j) acc -= H(i, j) * y[j];
    y[i] = acc / H(i, i);
  }
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(N);
  for (int i = 0; i < k; ++i) x += y[i] * basis[i];
  return x;
}

Solution DiscreteScene::solve(const IncidentField& inc) const {
  if (std::abs(incident_wave_number(inc) - scene_.wave_number) > 1e-12)
    throw PreconditionError("solve: incident wave number differs from the scene");
  const std::size_t V = volume_.size();
  const std::size_t B = boundary_.size();
  const double kappa = scene_.wave_number;
  const double k2 = kappa * kappa;

  Solution sol;
  sol.ui_cells = incident_at_cells(volume_, inc);
  if (V + B == 0) return sol;  // nothing scatters

  Eigen::VectorXcd rhs(V + B);
  for (std::size_t i = 0; i < V; ++i) {
    cplx acc = volume_diag_[i] * sol.ui_cells[i];
    for (std::size_t j = 0; j < V; ++j) {
      if (j == i) continue;
      acc += k2 * volume_.weights[j] * volume_.contrast[j] *
             fundamental_solution(volume_.cells[i], volume_.cells[j], kappa) * sol.ui_cells[j];
    }
    rhs[i] = -acc;
  }
  for (std::size_t b = 0; b < B; ++b) {
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < V; ++j)
      acc += k2 * volume_.weights[j] * volume_.contrast[j] *
             fundamental_solution(boundary_.nodes[b], volume_.cells[j], kappa) * sol.ui_cells[j];
    rhs[V + b] = 2.0 * acc - 2.0 * incident_value(inc, boundary_.nodes[b]);
  }

  Eigen::VectorXcd x;
  if (static_cast<int>(V + B) <= options_.dense_limit) {
    ensure_factorization();
    x = lu_->solve(rhs);
    sol.iterations = 0;
  } else {
    x = run_gmres(rhs, &sol.iterations);
  }

  sol.us.assign(V, cplx(0.0, 0.0));
  sol.psi.assign(B, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < V; ++i) sol.us[i] = x[i];
  for (std::size_t b = 0; b < B; ++b) sol.psi[b] = x[V + b];
  return sol;
}

std::vector<cplx> DiscreteScene::far_field(const Solution& sol,
                                           const std::vector<Vec3>& directions) const {
  const std::size_t V = volume_.size();
  const std::size_t B = boundary_.size();
  if (sol.us.size() != V || sol.psi.size() != B)
    throw PreconditionError("far_field: solution does not match the grids");
  const double kappa = scene_.wave_number;
  const double k2 = kappa * kappa;
  std::vector<cplx> out(directions.size(), cplx(0.0, 0.0));
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const Vec3 xhat = directions[d].normalized();
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < V; ++j)
      acc -= k2 * volume_.weights[j] * volume_.contrast[j] *
             (sol.us[j] + sol.ui_cells[j]) *
             std::exp(-kImag * kappa * xhat.dot(volume_.cells[j]));
    for (std::size_t b = 0; b < B; ++b)
      acc += boundary_.weights[b] * sol.psi[b] *
             (kImag * kappa - kImag * kappa * xhat.dot(boundary_.normals[b])) *
             std::exp(-kImag * kappa * xhat.dot(boundary_.nodes[b]));
    out[d] = acc / (4.0 * kPi);
  }
  return out;
}

std::vector<cplx> DiscreteScene::scattered_field(const Solution& sol,
                                                 const std::vector<Vec3>& points,
                                                 PotentialWarnings* warnings) const {
  const std::size_t V = volume_.size();
  const std::size_t B = boundary_.size();
  if (sol.us.size() != V || sol.psi.size() != B)
    throw PreconditionError("scattered_field: solution does not match the grids");
  if (scene_.has_obstacle())
    for (const auto& p : points)
      if (scene_.obstacle.contains(p))
        throw DomainError("scattered_field: point inside the obstacle");

  std::vector<cplx> total(V);
  for (std::size_t j = 0; j < V; ++j) total[j] = sol.us[j] + sol.ui_cells[j];
  std::vector<cplx> vq = apply_volume_potential(volume_, total, scene_.wave_number, points);
  std::vector<cplx> layer =
      apply_layer_potential(boundary_, sol.psi, scene_.wave_number, points, warnings);
  std::vector<cplx> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = -vq[i] + layer[i];
  return out;
}

DifferenceResidual difference_residual(const SceneC& scene_q, const SceneC& scene_qt,
                                       double h, const IncidentField& inc,
                                       const SolverOptions& options) {
  if (scene_q.media.size() != scene_qt.media.size())
    throw PreconditionError("difference_residual: scenes must share their supports");
  for (std::size_t i = 0; i < scene_q.media.size(); ++i) {
    const Shape& a = scene_q.media[i].support;
    const Shape& b = scene_qt.media[i].support;
    if (a.kind != b.kind || (a.center - b.center).norm() > 1e-14 ||
        std::abs(a.radius - b.radius) > 1e-14)
      throw PreconditionError("difference_residual: scenes must share their supports");
  }
  if (scene_q.has_obstacle() || scene_qt.has_obstacle())
    throw PreconditionError("difference_residual: obstacle-free scenes only");

  VolumeGrid grid_q = build_volume_grid_cartesian(scene_q, h);
  VolumeGrid grid_qt = build_volume_grid_cartesian(scene_qt, h);
  if (grid_q.size() != grid_qt.size())
    throw PreconditionError("difference_residual: lattice mismatch between scenes");

  DiscreteScene ds_q(scene_q, BoundaryGrid{}, grid_q, options);
  DiscreteScene ds_qt(scene_qt, BoundaryGrid{}, grid_qt, options);
  const Solution sol_q = ds_q.solve(inc);
  const Solution sol_qt = ds_qt.solve(inc);

  const double k2 = scene_q.wave_number * scene_q.wave_number;
  DifferenceResidual r;
  double res2 = 0.0, dom2 = 0.0;
  for (int i = 1; i + 1 < grid_q.dims[0]; ++i)
    for (int j = 1; j + 1 < grid_q.dims[1]; ++j)
      for (int k = 1; k + 1 < grid_q.dims[2]; ++k) {
        const int c0 = grid_q.cell_at[grid_q.lattice_index(i, j, k)];
        if (c0 < 0) continue;
        const int nb[6] = {grid_q.cell_at[grid_q.lattice_index(i - 1, j, k)],
                           grid_q.cell_at[grid_q.lattice_index(i + 1, j, k)],
                           grid_q.cell_at[grid_q.lattice_index(i, j - 1, k)],
                           grid_q.cell_at[grid_q.lattice_index(i, j + 1, k)],
                           grid_q.cell_at[grid_q.lattice_index(i, j, k - 1)],
                           grid_q.cell_at[grid_q.lattice_index(i, j, k + 1)]};
        bool interior = true;
        for (int n = 0; n < 6; ++n) interior = interior && nb[n] >= 0;
        if (!interior) continue;

        const cplx w0 = sol_q.us[c0] - sol_qt.us[c0];
        cplx lap = -6.0 * w0;
        for (int n = 0; n < 6; ++n) lap += sol_q.us[nb[n]] - sol_qt.us[nb[n]];
        lap /= h * h;

        const cplx q = 1.0 - grid_q.contrast[c0];
        const cplx delta = grid_qt.contrast[c0] - grid_q.contrast[c0];  // q - qt
        const cplx u_total_qt = sol_qt.us[c0] + sol_qt.ui_cells[c0];
        const cplx dominant = k2 * delta * u_total_qt;
        const cplx residual = lap + k2 * q * w0 + dominant;
        res2 += std::norm(residual);
        dom2 += std::norm(dominant);
        ++r.interior_cells;
      }
  r.residual_norm = std::sqrt(res2);
  r.dominant_norm = std::sqrt(dom2);
  r.ratio = r.dominant_norm > 0.0 ? r.residual_norm / r.dominant_norm
                                  : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace pscat
