#include "omnitrack/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace omnitrack
{

RobotPose predict(const RobotPose & state, const Input & u, double ts)
{
  return RobotPose{
    state.x + ts * u.v * std::cos(state.theta),
    state.y + ts * u.v * std::sin(state.theta),
    wrap_angle(state.theta + ts * u.omega)};
}

void OcpConfig::validate() const
{
  if (horizon < 1) {
    throw ConfigError("NMPC horizon must be >= 1");
  }
  if (!(ts > 0.0)) {
    throw ConfigError("NMPC ts must be > 0");
  }
  for (const double w : q) {
    if (!(w >= 0.0)) {
      throw ConfigError("NMPC Q diagonal must be >= 0");
    }
  }
  for (const double w : r) {
    if (!(w >= 0.0)) {
      throw ConfigError("NMPC R diagonal must be >= 0");
    }
  }
  if (!(v_max > 0.0) || !(omega_max > 0.0)) {
    throw ConfigError("NMPC bounds must be > 0");
  }
  if (!(kkt_tol > 0.0) || !(defect_tol > 0.0) || max_iterations < 1) {
    throw ConfigError("NMPC tolerances must be > 0 and max_iterations >= 1");
  }
}

OcpProblem OcpProblem::from_trajectory(
  const ReferenceTrajectory & traj, std::size_t k, const RobotPose & x0, int horizon)
{
  if (traj.size() == 0) {
    throw ConfigError("empty reference trajectory");
  }
  OcpProblem p;
  p.initial_state = x0;
  const std::size_t last = traj.size() - 1;
  for (int i = 0; i <= horizon; ++i) {
    const std::size_t idx = k + static_cast<std::size_t>(i);
    p.x_ref.push_back(traj.poses[std::min(idx, last)]);
    if (i < horizon) {
      p.u_ref.push_back(idx <= last ? Input{traj.v_ref[idx], traj.omega_ref[idx]} : Input{});
    }
  }
  return p;
}

std::string_view to_string(SolveStatus s)
{
  return s == SolveStatus::converged ? "converged" : "max_iterations";
}

std::size_t decision_size(int horizon)
{
  const auto n = static_cast<std::size_t>(horizon);
  return 2 * n + 3 * (n + 1);
}

Eigen::VectorXd OcpSolution::decision_vector() const
{
  const int n = static_cast<int>(inputs.size());
  Eigen::VectorXd w(static_cast<Eigen::Index>(decision_size(n)));
  Eigen::Index i = 0;
  for (const Input & u : inputs) {
    w(i++) = u.v;
    w(i++) = u.omega;
  }
  for (const RobotPose & x : states) {
    w(i++) = x.x;
    w(i++) = x.y;
    w(i++) = x.theta;
  }
  return w;
}

double ocp_cost(const OcpProblem & problem, const OcpConfig & cfg, const Eigen::VectorXd & w)
{
  const int n = problem.horizon();
  if (static_cast<int>(problem.x_ref.size()) != n + 1) {
    throw DimensionMismatchError("x_ref must have horizon + 1 entries");
  }
  if (static_cast<std::size_t>(w.size()) != decision_size(n)) {
    throw DimensionMismatchError(
            "decision vector has " + std::to_string(w.size()) + " entries, expected " +
            std::to_string(decision_size(n)));
  }
  double j = 0.0;
  const Eigen::Index xs = 2 * n;
  for (int k = 0; k <= n; ++k) {
    const RobotPose & ref = problem.x_ref[static_cast<std::size_t>(k)];
    const double ex = w(xs + 3 * k) - ref.x;
    const double ey = w(xs + 3 * k + 1) - ref.y;
    const double et = wrap_angle(w(xs + 3 * k + 2) - ref.theta);
    j += cfg.q[0] * ex * ex + cfg.q[1] * ey * ey + cfg.q[2] * et * et;
  }
  for (int k = 0; k < n; ++k) {
    const Input & ref = problem.u_ref[static_cast<std::size_t>(k)];
    const double dv = w(2 * k) - ref.v;
    const double dw = w(2 * k + 1) - ref.omega;
    j += cfg.r[0] * dv * dv + cfg.r[1] * dw * dw;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Box-constrained QP

Eigen::VectorXd solve_box_qp(
  const Eigen::MatrixXd & h, const Eigen::VectorXd & g, const Eigen::VectorXd & lb,
  const Eigen::VectorXd & ub)
{
  const Eigen::Index n = g.size();
  enum class Bound : int {free, lower, upper};
  std::vector<Bound> state(static_cast<std::size_t>(n), Bound::free);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n).cwiseMax(lb).cwiseMin(ub);
  const double tol = 1e-12 * (1.0 + g.lpNorm<Eigen::Infinity>());

  const int max_iter = 20 * static_cast<int>(n) + 50;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == Bound::free) {
        free_idx.push_back(i);
      }
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    if (nf > 0) {
      const Eigen::VectorXd grad = g + h * x;
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs(a) = -grad(free_idx[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < nf; ++b) {
          hff(a, b) = h(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
        }
      }
      const Eigen::VectorXd pf = hff.llt().solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) {
        p(free_idx[static_cast<std::size_t>(a)]) = pf(a);
      }
    }

    // Ratio test over free variables.
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    Bound blocking_side = Bound::free;
    for (const Eigen::Index i : free_idx) {
      if (p(i) < 0.0) {
        const double a = (lb(i) - x(i)) / p(i);
        if (a < alpha) {
          alpha = std::max(a, 0.0);
          blocking = i;
          blocking_side = Bound::lower;
        }
      } else if (p(i) > 0.0) {
        const double a = (ub(i) - x(i)) / p(i);
        if (a < alpha) {
          alpha = std::max(a, 0.0);
          blocking = i;
          blocking_side = Bound::upper;
        }
      }
    }
    x += alpha * p;
    if (blocking >= 0) {
      state[static_cast<std::size_t>(blocking)] = blocking_side;
      x(blocking) = blocking_side == Bound::lower ? lb(blocking) : ub(blocking);
      continue;
    }

    // Full step: check multiplier signs of the fixed variables.
    const Eigen::VectorXd grad = g + h * x;
    double worst = tol;
    Eigen::Index release = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Bound s = state[static_cast<std::size_t>(i)];
      const double violation =
        s == Bound::lower ? -grad(i) : (s == Bound::upper ? grad(i) : 0.0);
      if (violation > worst) {
        worst = violation;
        release = i;
      }
    }
    if (release < 0) {
      break;
    }
    state[static_cast<std::size_t>(release)] = Bound::free;
  }
  return x.cwiseMax(lb).cwiseMin(ub);
}

// ---------------------------------------------------------------------------
// SQP

namespace
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

Vec3 step_model(const Vec3 & x, const Input & u, double ts)
{
  return Vec3(x(0) + ts * u.v * std::cos(x(2)), x(1) + ts * u.v * std::sin(x(2)),
           x(2) + ts * u.omega);
}

// Difference a - b with the heading component wrapped.
Vec3 state_diff(const Vec3 & a, const Vec3 & b)
{
  return Vec3(a(0) - b(0), a(1) - b(1), wrap_angle(a(2) - b(2)));
}

struct Iterate
{
  std::vector<Input> u;
  std::vector<Vec3> x;  // unwrapped headings
};

struct Evaluation
{
  std::vector<Vec3> e;         // x_k - x_ref,k
  std::vector<Eigen::Vector2d> du;  // u_k - u_ref,k
  std::vector<Vec3> c;         // defects: c_0 = xbar - x_0, c_{k+1} = f(x_k, u_k) - x_{k+1}
  double cost = 0.0;
  double defect_l1 = 0.0;
  double defect_inf = 0.0;
};

class Sqp
{
public:
  Sqp(const OcpProblem & p, const OcpConfig & cfg)
  : p_(p), cfg_(cfg), n_(p.horizon())
  {
    xbar_ = Vec3(p.initial_state.x, p.initial_state.y, p.initial_state.theta);
  }

  Evaluation evaluate(const Iterate & it) const
  {
    Evaluation ev;
    const auto n = static_cast<std::size_t>(n_);
    ev.e.resize(n + 1);
    ev.du.resize(n);
    ev.c.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      const RobotPose & r = p_.x_ref[k];
      ev.e[k] = state_diff(it.x[k], Vec3(r.x, r.y, r.theta));
      ev.cost += cfg_.q[0] * ev.e[k](0) * ev.e[k](0) + cfg_.q[1] * ev.e[k](1) * ev.e[k](1) +
        cfg_.q[2] * ev.e[k](2) * ev.e[k](2);
    }
    for (std::size_t k = 0; k < n; ++k) {
      ev.du[k] = Eigen::Vector2d(it.u[k].v - p_.u_ref[k].v, it.u[k].omega - p_.u_ref[k].omega);
      ev.cost += cfg_.r[0] * ev.du[k](0) * ev.du[k](0) + cfg_.r[1] * ev.du[k](1) * ev.du[k](1);
    }
    ev.c[0] = state_diff(xbar_, it.x[0]);
    for (std::size_t k = 0; k < n; ++k) {
      ev.c[k + 1] = state_diff(step_model(it.x[k], it.u[k], cfg_.ts), it.x[k + 1]);
    }
    for (const Vec3 & c : ev.c) {
      ev.defect_l1 += c.lpNorm<1>();
      ev.defect_inf = std::max(ev.defect_inf, c.lpNorm<Eigen::Infinity>());
    }
    return ev;
  }

  // Sensitivities dx = G du + h of the linearized dynamics.
  void linearize(const Iterate & it, const Evaluation & ev, Eigen::MatrixXd & g_mat,
    Eigen::VectorXd & h_vec) const
  {
    const Eigen::Index nx = 3 * (n_ + 1);
    const Eigen::Index nu = 2 * n_;
    g_mat.setZero(nx, nu);
    h_vec.setZero(nx);
    h_vec.segment<3>(0) = ev.c[0];
    for (int k = 0; k < n_; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const double th = it.x[ks](2);
      const double v = it.u[ks].v;
      Mat3 a = Mat3::Identity();
      a(0, 2) = -cfg_.ts * v * std::sin(th);
      a(1, 2) = cfg_.ts * v * std::cos(th);
      Mat32 b = Mat32::Zero();
      b(0, 0) = cfg_.ts * std::cos(th);
      b(1, 0) = cfg_.ts * std::sin(th);
      b(2, 1) = cfg_.ts;
      const Eigen::Index r0 = 3 * k;
      const Eigen::Index r1 = 3 * (k + 1);
      g_mat.block(r1, 0, 3, 2 * k) = a * g_mat.block(r0, 0, 3, 2 * k);
      g_mat.block<3, 2>(r1, 2 * k) = b;
      h_vec.segment<3>(r1) = a * h_vec.segment<3>(r0) + ev.c[ks + 1];
    }
  }

  Iterate rollout(const std::vector<Input> & u) const
  {
    Iterate it;
    it.u = u;
    it.x.resize(u.size() + 1);
    it.x[0] = xbar_;
    for (std::size_t k = 0; k < u.size(); ++k) {
      it.x[k + 1] = step_model(it.x[k], u[k], cfg_.ts);
    }
    return it;
  }

  OcpSolution solve(std::vector<Input> u0)
  {
    const auto n = static_cast<std::size_t>(n_);
    const Eigen::Index nu = 2 * n_;
    const Eigen::Index nx = 3 * (n_ + 1);
    for (Input & u : u0) {
      u.v = std::clamp(u.v, -cfg_.v_max, cfg_.v_max);
      u.omega = std::clamp(u.omega, -cfg_.omega_max, cfg_.omega_max);
    }
    Iterate it = rollout(u0);

    Eigen::VectorXd qbar(nx);
    for (Eigen::Index i = 0; i < nx; ++i) {
      qbar(i) = cfg_.q[static_cast<std::size_t>(i % 3)];
    }
    Eigen::VectorXd rbar(nu);
    for (Eigen::Index i = 0; i < nu; ++i) {
      rbar(i) = cfg_.r[static_cast<std::size_t>(i % 2)];
    }

    OcpSolution sol;
    double mu = 1.0;
    bool converged = false;
    int iterations = 0;
    Eigen::MatrixXd g_mat;
    Eigen::VectorXd h_vec;
    double stationarity = 0.0;
    Evaluation ev = evaluate(it);

    auto flatten_e = [&](const Evaluation & e) {
        Eigen::VectorXd v(nx);
        for (std::size_t k = 0; k <= n; ++k) {
          v.segment<3>(3 * static_cast<Eigen::Index>(k)) = e.e[k];
        }
        return v;
      };
    auto flatten_du = [&](const Evaluation & e) {
        Eigen::VectorXd v(nu);
        for (std::size_t k = 0; k < n; ++k) {
          v.segment<2>(2 * static_cast<Eigen::Index>(k)) = e.du[k];
        }
        return v;
      };
    auto bounds = [&](const Iterate & i, Eigen::VectorXd & lb, Eigen::VectorXd & ub) {
        lb.resize(nu);
        ub.resize(nu);
        for (std::size_t k = 0; k < n; ++k) {
          const auto j = 2 * static_cast<Eigen::Index>(k);
          lb(j) = -cfg_.v_max - i.u[k].v;
          ub(j) = cfg_.v_max - i.u[k].v;
          lb(j + 1) = -cfg_.omega_max - i.u[k].omega;
          ub(j + 1) = cfg_.omega_max - i.u[k].omega;
        }
      };
    auto projected_gradient = [&](const Iterate & i, const Eigen::VectorXd & grad) {
        double r = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const auto j = 2 * static_cast<Eigen::Index>(k);
          const double v = i.u[k].v;
          const double w = i.u[k].omega;
          r = std::max(r, std::abs(v - std::clamp(v - grad(j), -cfg_.v_max, cfg_.v_max)));
          r = std::max(r,
            std::abs(w - std::clamp(w - grad(j + 1), -cfg_.omega_max, cfg_.omega_max)));
        }
        return r;
      };

    int escapes = 0;
    for (;;) {
      linearize(it, ev, g_mat, h_vec);
      const Eigen::VectorXd e = flatten_e(ev);
      const Eigen::VectorXd du_ref = flatten_du(ev);
      const Eigen::MatrixXd gq = g_mat.transpose() * qbar.asDiagonal();
      const Eigen::VectorXd reduced_grad = 2.0 * (gq * e + rbar.cwiseProduct(du_ref));
      stationarity = projected_gradient(it, reduced_grad);
      if (stationarity <= cfg_.kkt_tol && ev.defect_inf <= cfg_.defect_tol) {
        // Gauss-Newton cannot leave a saddle of the reduced cost; follow
        // negative curvature of the exact Hessian when there is some.
        if (escapes < kMaxEscapes) {
          const Iterate fed = rollout(it.u);
          const Evaluation fed_ev = evaluate(fed);
          if (auto next = escape_saddle(fed, fed_ev.cost, qbar, rbar)) {
            ++escapes;
            Evaluation next_ev = evaluate(*next);
            sol.merit_steps.push_back({ev.cost + mu * ev.defect_l1, next_ev.cost});
            it = std::move(*next);
            ev = std::move(next_ev);
            continue;
          }
        }
        converged = true;
        break;
      }
      if (iterations >= cfg_.max_iterations) {
        break;
      }

      Eigen::MatrixXd hess = 2.0 * (gq * g_mat);
      hess.diagonal() += 2.0 * rbar;
      hess.diagonal().array() += 1e-10 * (1.0 + hess.diagonal().maxCoeff());
      const Eigen::VectorXd grad = 2.0 * (gq * (e + h_vec) + rbar.cwiseProduct(du_ref));
      Eigen::VectorXd lb;
      Eigen::VectorXd ub;
      bounds(it, lb, ub);
      const Eigen::VectorXd d_u = solve_box_qp(hess, grad, lb, ub);
      const Eigen::VectorXd d_x = g_mat * d_u + h_vec;
      ++iterations;

      // Directional derivative of the l1 merit along the full step.
      const double dj = 2.0 * (e.cwiseProduct(qbar).dot(d_x) + du_ref.cwiseProduct(rbar).dot(d_u));
      const double curvature = 2.0 * (d_x.cwiseProduct(qbar).dot(d_x) +
        d_u.cwiseProduct(rbar).dot(d_u));
      if (ev.defect_l1 > 0.0) {
        mu = std::max(mu, (dj + 0.5 * curvature) / (0.5 * ev.defect_l1) + 1e-3);
      }
      const double slope = dj - mu * ev.defect_l1;
      const double merit0 = ev.cost + mu * ev.defect_l1;
      if (!(slope < 0.0)) {
        // No descent left: the QP step is numerically zero.
        break;
      }

      double alpha = 1.0;
      bool accepted = false;
      Iterate trial;
      Evaluation trial_ev;
      for (int ls = 0; ls < 40; ++ls) {
        trial.u = it.u;
        trial.x = it.x;
        for (std::size_t k = 0; k < n; ++k) {
          const auto j = 2 * static_cast<Eigen::Index>(k);
          trial.u[k].v = std::clamp(it.u[k].v + alpha * d_u(j), -cfg_.v_max, cfg_.v_max);
          trial.u[k].omega =
            std::clamp(it.u[k].omega + alpha * d_u(j + 1), -cfg_.omega_max, cfg_.omega_max);
        }
        for (std::size_t k = 0; k <= n; ++k) {
          trial.x[k] += alpha * d_x.segment<3>(3 * static_cast<Eigen::Index>(k));
        }
        trial_ev = evaluate(trial);
        const double merit = trial_ev.cost + mu * trial_ev.defect_l1;
        if (merit <= merit0 + 1e-4 * alpha * slope) {
          sol.merit_steps.push_back({merit0, merit});
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        break;
      }
      it = std::move(trial);
      ev = std::move(trial_ev);
    }

    if (ev.defect_inf > cfg_.defect_tol) {
      // Restore exact feasibility from the current inputs.
      it = rollout(it.u);
      ev = evaluate(it);
      linearize(it, ev, g_mat, h_vec);
      const Eigen::MatrixXd gq = g_mat.transpose() * qbar.asDiagonal();
      stationarity = projected_gradient(
        it, 2.0 * (gq * flatten_e(ev) + rbar.cwiseProduct(flatten_du(ev))));
      converged = converged && stationarity <= cfg_.kkt_tol;
    }

    sol.inputs = it.u;
    sol.states.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      sol.states[k] = RobotPose{it.x[k](0), it.x[k](1), wrap_angle(it.x[k](2))};
    }
    sol.cost = ev.cost;
    sol.defect_norm = ev.defect_inf;
    sol.kkt_residual = std::max(stationarity, ev.defect_inf);
    sol.iterations = iterations;
    sol.status = converged ? SolveStatus::converged : SolveStatus::max_iterations;
    return sol;
  }

private:
  static constexpr int kMaxEscapes = 3;

  // Gradient of the single-shooting cost J(u) = cost(rollout(u)).
  Eigen::VectorXd reduced_gradient(
    const std::vector<Input> & u, const Eigen::VectorXd & qbar, const Eigen::VectorXd & rbar) const
  {
    const Iterate it = rollout(u);
    const Evaluation ev = evaluate(it);
    Eigen::MatrixXd g_mat;
    Eigen::VectorXd h_vec;
    linearize(it, ev, g_mat, h_vec);
    Eigen::VectorXd e(3 * (n_ + 1));
    for (int k = 0; k <= n_; ++k) {
      e.segment<3>(3 * k) = ev.e[static_cast<std::size_t>(k)];
    }
    Eigen::VectorXd du(2 * n_);
    for (int k = 0; k < n_; ++k) {
      du.segment<2>(2 * k) = ev.du[static_cast<std::size_t>(k)];
    }
    return 2.0 * (g_mat.transpose() * qbar.cwiseProduct(e) + rbar.cwiseProduct(du));
  }

  static double & component(std::vector<Input> & u, Eigen::Index j)
  {
    Input & in = u[static_cast<std::size_t>(j / 2)];
    return j % 2 == 0 ? in.v : in.omega;
  }

  static double value(const std::vector<Input> & u, Eigen::Index j)
  {
    const Input & in = u[static_cast<std::size_t>(j / 2)];
    return j % 2 == 0 ? in.v : in.omega;
  }

  double bound_of(Eigen::Index j) const {return j % 2 == 0 ? cfg_.v_max : cfg_.omega_max;}

  // Descent step along the most negative curvature direction of the exact
  // reduced Hessian (finite differences of the gradient) over the inputs
  // that are off their bounds. Empty when the Hessian is positive
  // semidefinite there or no decrease is found.
  std::optional<Iterate> escape_saddle(
    const Iterate & it, double cost, const Eigen::VectorXd & qbar,
    const Eigen::VectorXd & rbar) const
  {
    const Eigen::Index nu = 2 * n_;
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index j = 0; j < nu; ++j) {
      if (std::abs(value(it.u, j)) < bound_of(j) - 1e-6) {
        free_idx.push_back(j);
      }
    }
    if (free_idx.empty()) {
      return std::nullopt;
    }
    const auto m = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd hess(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const double h =
        1e-5 * std::max(1.0, std::abs(value(it.u, free_idx[static_cast<std::size_t>(a)])));
      std::vector<Input> up = it.u;
      std::vector<Input> dn = it.u;
      component(up, free_idx[static_cast<std::size_t>(a)]) += h;
      component(dn, free_idx[static_cast<std::size_t>(a)]) -= h;
      const Eigen::VectorXd gp = reduced_gradient(up, qbar, rbar);
      const Eigen::VectorXd gm = reduced_gradient(dn, qbar, rbar);
      for (Eigen::Index b = 0; b < m; ++b) {
        hess(b, a) = (gp(free_idx[static_cast<std::size_t>(b)]) -
          gm(free_idx[static_cast<std::size_t>(b)])) / (2.0 * h);
      }
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const double lmin = eig.eigenvalues()(0);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (!(lmin < -1e-6 * scale)) {
      return std::nullopt;
    }
    const Eigen::VectorXd d = eig.eigenvectors().col(0);
    const double reach = std::min(cfg_.v_max, cfg_.omega_max) / d.cwiseAbs().maxCoeff();
    for (double alpha = reach; alpha > 1e-8 * reach; alpha *= 0.5) {
      for (const double sign : {1.0, -1.0}) {
        std::vector<Input> u = it.u;
        for (Eigen::Index a = 0; a < m; ++a) {
          const Eigen::Index j = free_idx[static_cast<std::size_t>(a)];
          double & c = component(u, j);
          c = std::clamp(c + sign * alpha * d(a), -bound_of(j), bound_of(j));
        }
        Iterate trial = rollout(u);
        // Require part of the decrease predicted by the curvature alone.
        if (evaluate(trial).cost < cost + 0.25 * lmin * alpha * alpha) {
          return trial;
        }
      }
    }
    return std::nullopt;
  }

  const OcpProblem & p_;
  const OcpConfig & cfg_;
  int n_;
  Vec3 xbar_;
};

}  // namespace

OcpSolution solve_ocp(
  const OcpProblem & problem, const OcpConfig & cfg,
  const std::optional<std::vector<Input>> & warm_start)
{
  cfg.validate();
  const int n = problem.horizon();
  if (n != cfg.horizon) {
    throw DimensionMismatchError("problem horizon differs from config horizon");
  }
  if (static_cast<int>(problem.x_ref.size()) != n + 1) {
    throw DimensionMismatchError("x_ref must have horizon + 1 entries");
  }
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != n) {
      throw DimensionMismatchError("warm start has the wrong number of inputs");
    }
    return Sqp(problem, cfg).solve(*warm_start);
  }
  // Cold start: reference inputs plus constant yaw-rate seeds, best cost wins.
  OcpSolution best = Sqp(problem, cfg).solve(problem.u_ref);
  int iterations = best.iterations;
  for (const double s : {0.0, -1.0, -0.5, 0.5, 1.0}) {
    std::vector<Input> seed = problem.u_ref;
    for (Input & u : seed) {
      u.omega = s * cfg.omega_max;
    }
    OcpSolution cand = Sqp(problem, cfg).solve(std::move(seed));
    iterations += cand.iterations;
    const bool better_status =
      cand.status == SolveStatus::converged && best.status != SolveStatus::converged;
    const bool same_status = cand.status == best.status;
    if (better_status || (same_status && cand.cost < best.cost)) {
      best = std::move(cand);
    }
  }
  best.iterations = iterations;
  return best;
}

// ---------------------------------------------------------------------------
// Receding horizon

NmpcController::NmpcController(OcpConfig cfg)
: cfg_(cfg)
{
  cfg_.validate();
}

BodyVelocity NmpcController::command(
  const RobotPose & robot, const ReferenceTrajectory & traj, std::size_t k)
{
  const OcpProblem problem = OcpProblem::from_trajectory(traj, k, robot, cfg_.horizon);
  std::optional<std::vector<Input>> warm;
  if (warm_start_ && has_last_) {
    std::vector<Input> shifted(last_.inputs.begin() + 1, last_.inputs.end());
    shifted.push_back(last_.inputs.back());
    warm = std::move(shifted);
  }
  last_ = solve_ocp(problem, cfg_, warm);
  has_last_ = true;
  const Input u0 = last_.inputs.front();
  const double psi = predict(robot, u0, cfg_.ts).theta;
  return BodyVelocity{u0.v * std::cos(psi), u0.v * std::sin(psi), u0.omega};
}

}  // namespace omnitrack
