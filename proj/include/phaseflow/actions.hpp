#pragma once

// Group actions of torus diffeomorphisms on images and semi-Lagrangian
// integration of the flow maps phi_{t,0} (template side) and phi_{t,1}
// (endpoint side).

#include "phaseflow/grid.hpp"

namespace phaseflow {

enum class Action { Geometric, MassPreserving };

// Jacobian power used by the mass-preserving pullback: Full = |Dphi|
// (conserves total mass in 2-D), Sqrt = |Dphi|^(1/2) (half-density
// variant, selectable for comparison).
enum class MassForm { Full, Sqrt };

// Time-indexed velocity fields. v[i] is the velocity on the interval
// (t_i, t_{i+1}); there are n_steps of them, dt = 1/n_steps.
struct VelocityPath {
  std::vector<VectorField> v;
  double dt = 0.1;

  VelocityPath() = default;
  VelocityPath(int n_steps, int rows, int cols)
      : v(static_cast<size_t>(n_steps), VectorField(rows, cols)), dt(1.0 / n_steps) {}
  int n_steps() const { return static_cast<int>(v.size()); }
};

// Sampled maps phi_{t_j,0} and phi_{t_j,1}, j = 0..n_steps.
// phi_t0[0] and phi_t1[n_steps] stay the identity.
struct DeformationPath {
  std::vector<CoordField> phi_t0, phi_t1;
  double dt = 0.1;

  DeformationPath() = default;
  DeformationPath(int n_steps, int rows, int cols) : dt(1.0 / n_steps) {
    CoordField id = identity_coords(rows, cols);
    phi_t0.assign(static_cast<size_t>(n_steps) + 1, id);
    phi_t1.assign(static_cast<size_t>(n_steps) + 1, id);
  }
  int n_steps() const { return static_cast<int>(phi_t0.size()) - 1; }
};

// Composition prev(query): interpolate the displacement prev - id at the
// query coordinates (displacements are smooth and small, so they carry no
// torus seam) and add it to the query point.
inline CoordField compose_coords(const CoordField& prev, const CoordField& query) {
  int R = prev.rows(), C = prev.cols();
  ScalarField dx(R, C), dy(R, C);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      dx(i, j) = wrap_half(prev.x(i, j) - i, R);
      dy(i, j) = wrap_half(prev.y(i, j) - j, C);
    }
  CoordField out(R, C);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      double qx = query.x(i, j), qy = query.y(i, j);
      out.x(i, j) = qx + interp_at(dx, qx, qy);
      out.y(i, j) = qy + interp_at(dy, qx, qy);
    }
  return out;
}

inline ScalarField pullback(const ScalarField& f, const CoordField& phi, Action action,
                            MassForm form = MassForm::Full) {
  ScalarField comp = interp(f, phi);
  if (action == Action::Geometric) return comp;
  ScalarField det = jacobian_det(phi);
  ScalarField out(comp.rows, comp.cols);
  if (form == MassForm::Full) {
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = det.v[i] * comp.v[i];
  } else {
    for (size_t i = 0; i < out.v.size(); ++i)
      out.v[i] = std::sqrt(std::max(det.v[i], 0.0)) * comp.v[i];
  }
  return out;
}

// Forward recursion phi_{t_j,0}(x) = phi_{t_{j-1},0}(x - dt*v(x)), j = 1..n,
// from phi_{t_0,0} = id. Step j consumes the stored interval field v[j-1].
inline void update_phi_t0(DeformationPath& path, const VelocityPath& vel) {
  int n = vel.n_steps();
  int R = path.phi_t0[0].rows(), C = path.phi_t0[0].cols();
  path.phi_t0[0] = identity_coords(R, C);
  CoordField pts(R, C);
  for (int j = 1; j <= n; ++j) {
    const VectorField& v = vel.v[j - 1];
    for (int i = 0; i < R; ++i)
      for (int k = 0; k < C; ++k) {
        pts.x(i, k) = i - vel.dt * v.x(i, k);
        pts.y(i, k) = k - vel.dt * v.y(i, k);
      }
    path.phi_t0[j] = compose_coords(path.phi_t0[j - 1], pts);
  }
}

// Backward recursion phi_{t_j,1}(x) = phi_{t_{j+1},1}(x + dt*v(x)),
// j = n-1..0, from phi_{t_n,1} = id. Step j consumes v[j].
inline void update_phi_t1(DeformationPath& path, const VelocityPath& vel) {
  int n = vel.n_steps();
  int R = path.phi_t1[0].rows(), C = path.phi_t1[0].cols();
  path.phi_t1[n] = identity_coords(R, C);
  CoordField pts(R, C);
  for (int j = n - 1; j >= 0; --j) {
    const VectorField& v = vel.v[j];
    for (int i = 0; i < R; ++i)
      for (int k = 0; k < C; ++k) {
        pts.x(i, k) = i + vel.dt * v.x(i, k);
        pts.y(i, k) = k + vel.dt * v.y(i, k);
      }
    path.phi_t1[j] = compose_coords(path.phi_t1[j + 1], pts);
  }
}

// Estimate at time t_j computed as (I0 * phi_{1,0}) * phi_{t_j,1} (two-stage
// transport): the same endpoint image feeds every time slice, which keeps the
// gradient fields and the data residual consistent. j = n_steps gives the
// reconstruction.
inline ScalarField transported_template(const ScalarField& I0, const DeformationPath& path, int j,
                                        Action action, MassForm form = MassForm::Full) {
  ScalarField end = pullback(I0, path.phi_t0[path.n_steps()], action, form);
  return pullback(end, path.phi_t1[j], action, form);
}

}  // namespace phaseflow
