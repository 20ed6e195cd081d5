#pragma once

/// Sub-Riemannian geodesics on SE(2) = R^2 x S^1.
///
/// The horizontal distribution is spanned by X = d/dtheta and
/// Y = cos(theta) d/dx + sin(theta) d/dy, with Z = [X, Y]. States are kept in
/// the moving frame: p1 is the momentum along Y, p2 along X and p3 along Z.
/// Two formulations are integrated:
///
///   full     (x, y, theta, p1, p2, p3)   six-dimensional Hamiltonian flow
///   reduced  (x, y, theta, gamma, gamma') pendulum-phase form at fixed E
///
/// with E = p1^2 + p2^2 = 2H and p1 = sqrt(E) sin(gamma/2),
/// p2 = sqrt(E) cos(gamma/2), p3 = gamma'/2.

#include <span>
#include <string>
#include <vector>

namespace bordernet::geodesy {

inline constexpr double kDefaultDt = 1e-3;
inline constexpr double kDefaultTEnd = 5.0;
inline constexpr double kDefaultEnergy = 1.0;

struct GeodesicState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
};

struct ReducedState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
  double gammadot = 0.0;
};

/// Canonical cotangent coordinates (p_x, p_y, p_theta) of a moving-frame state.
struct CanonicalMomenta {
  double px = 0.0;
  double py = 0.0;
  double ptheta = 0.0;
};

template <typename State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  double energy = 0.0;  // E = 2H
};

using FullTrajectory = Trajectory<GeodesicState>;
using ReducedTrajectory = Trajectory<ReducedState>;

/// H = (p1^2 + p2^2) / 2.
double hamiltonian(const GeodesicState& s);

/// K = gamma'^2 / 2 - E cos(gamma); conserved by gamma'' = -E sin(gamma).
double pendulum_energy(const ReducedState& s, double energy);

/// Time derivative of the full Hamiltonian system, returned as a state.
GeodesicState full_rhs(const GeodesicState& s);

/// Time derivative (x', y', theta', gamma', gamma'') of the reduced system.
/// Throws std::invalid_argument for energy < 0.
ReducedState reduced_rhs(const ReducedState& s, double energy);

CanonicalMomenta canonical_momenta(const GeodesicState& s);

/// Full-system state with the momenta implied by (gamma, gamma', E).
GeodesicState to_full(const ReducedState& s, double energy);

/// Wraps an angle into [0, 2pi).
double wrap_angle(double theta);

/// Shortest signed distance between two angles, in (-pi, pi].
double angle_difference(double a, double b);

/// Fixed-step classical RK4. Samples every step, starting at t = 0; the final
/// sample lies within dt of t_end. Theta is wrapped after every step, gamma
/// is left unwrapped.
FullTrajectory integrate(const GeodesicState& initial, double t_end, double dt);
ReducedTrajectory integrate(const ReducedState& initial, double energy, double t_end,
                            double dt);

/// One reduced trajectory per initial phase, all launched from the origin
/// with theta = 0 and gamma' = 0.
std::vector<ReducedTrajectory> association_fan(double energy, std::span<const double> gammas,
                                               double t_end, double dt);

/// n phases evenly spaced in (0, 2pi), endpoints excluded.
std::vector<double> fan_phases(int n);

/// CSV rows "t,x,y,theta" (full) or "t,x,y,theta,gamma,gammadot" (reduced).
/// Fans are written with a leading "curve" column.
std::string to_csv(const FullTrajectory& trajectory);
std::string to_csv(const ReducedTrajectory& trajectory);
std::string to_csv(std::span<const FullTrajectory> fan);
std::string to_csv(std::span<const ReducedTrajectory> fan);

/// SVG rendering of the (x, y) projection of a fan.
std::string fan_svg(std::span<const FullTrajectory> fan);
std::string fan_svg(std::span<const ReducedTrajectory> fan);

}  // namespace bordernet::geodesy
