#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "omnitrack/kinematics.hpp"
#include "omnitrack/planning.hpp"

namespace omnitrack
{

class DimensionMismatchError : public Error
{
public:
  using Error::Error;
};

/// Unicycle input: forward speed and yaw rate.
struct Input
{
  double v = 0.0;
  double omega = 0.0;
};

/// Forward-Euler unicycle step; heading wrapped into (-pi, pi].
RobotPose predict(const RobotPose & state, const Input & u, double ts);

struct OcpConfig
{
  int horizon = 15;
  double ts = 0.1;
  std::array<double, 3> q{15.0, 15.0, 15.0};  // diagonal of Q
  std::array<double, 2> r{1.0, 1.0};          // diagonal of R
  double v_max = 1.5;
  double omega_max = 3.14;
  double kkt_tol = 1e-4;
  double defect_tol = 1e-8;
  int max_iterations = 50;

  void validate() const;
};

/// Tracking OCP over one horizon. x_ref has horizon + 1 entries, u_ref has
/// horizon entries.
struct OcpProblem
{
  RobotPose initial_state{};
  std::vector<RobotPose> x_ref;
  std::vector<Input> u_ref;

  /// Reference window starting at sample k. Past the end of the trajectory
  /// the final pose is held with zero reference inputs.
  static OcpProblem from_trajectory(
    const ReferenceTrajectory & traj, std::size_t k, const RobotPose & x0, int horizon);

  int horizon() const {return static_cast<int>(u_ref.size());}
};

enum class SolveStatus
{
  converged,
  max_iterations,
};

std::string_view to_string(SolveStatus s);

struct OcpSolution
{
  std::vector<Input> inputs;      // u_0 .. u_{N-1}
  std::vector<RobotPose> states;  // x_0 .. x_N, headings wrapped
  double cost = 0.0;
  double kkt_residual = 0.0;
  double defect_norm = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::converged;
  /// (before, after) l1 merit of every accepted step, both evaluated with the
  /// penalty weight of that step.
  std::vector<std::array<double, 2>> merit_steps;

  /// [u_0 .. u_{N-1}, x_0 .. x_N] flattened.
  Eigen::VectorXd decision_vector() const;
};

/// Number of decision variables for a horizon: 2N inputs plus 3(N+1) states.
std::size_t decision_size(int horizon);

/// Tracking cost of a flattened decision vector; heading errors are wrapped
/// before weighting. Throws DimensionMismatchError on a wrong length.
double ocp_cost(const OcpProblem & problem, const OcpConfig & cfg, const Eigen::VectorXd & w);

/// Gauss-Newton SQP on the multiple-shooting transcription. Every iteration
/// linearizes the dynamics, condenses the state steps, solves the box-bounded
/// QP in the inputs with an active-set method and backtracks on an l1 merit
/// function. Inputs stay inside their bounds at every iterate.
///
/// `warm_start` inputs (if given) seed the iteration; states are then rolled
/// out from the initial state. Without it the reference inputs are used.
OcpSolution solve_ocp(
  const OcpProblem & problem, const OcpConfig & cfg,
  const std::optional<std::vector<Input>> & warm_start = std::nullopt);

/// Minimizes 0.5 x'Hx + g'x subject to lb <= x <= ub (H symmetric positive
/// definite, lb <= 0 <= ub). Primal active-set method; exact up to round-off.
Eigen::VectorXd solve_box_qp(
  const Eigen::MatrixXd & h, const Eigen::VectorXd & g, const Eigen::VectorXd & lb,
  const Eigen::VectorXd & ub);

/// Receding-horizon tracker. Holds the previous solution for warm starting;
/// a single instance is not reentrant.
class NmpcController
{
public:
  explicit NmpcController(OcpConfig cfg);

  /// Solves the OCP for reference sample k and converts u_0 into a global
  /// velocity along the predicted heading of x_1.
  BodyVelocity command(const RobotPose & robot, const ReferenceTrajectory & traj, std::size_t k);

  const OcpSolution & last_solution() const {return last_;}
  bool has_solution() const {return has_last_;}
  void reset() {has_last_ = false;}
  void set_warm_start(bool enabled) {warm_start_ = enabled;}
  const OcpConfig & config() const {return cfg_;}

private:
  OcpConfig cfg_;
  OcpSolution last_;
  bool has_last_ = false;
  bool warm_start_ = true;
};

}  // namespace omnitrack
