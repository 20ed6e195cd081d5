#include "bordernet/geodesy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bordernet::geodesy {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <std::size_t N>
using Vec = std::array<double, N>;

Vec<6> pack(const GeodesicState& s) { return {s.x, s.y, s.theta, s.p1, s.p2, s.p3}; }
GeodesicState unpack6(const Vec<6>& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
Vec<5> pack(const ReducedState& s) { return {s.x, s.y, s.theta, s.gamma, s.gammadot}; }
ReducedState unpack5(const Vec<5>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

template <std::size_t N>
Vec<N> axpy(const Vec<N>& base, double h, const Vec<N>& slope) {
  Vec<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + h * slope[i];
  return out;
}

template <std::size_t N, typename Rhs>
Vec<N> rk4_step(const Vec<N>& y, double h, Rhs&& rhs) {
  const Vec<N> k1 = rhs(y);
  const Vec<N> k2 = rhs(axpy(y, 0.5 * h, k1));
  const Vec<N> k3 = rhs(axpy(y, 0.5 * h, k2));
  const Vec<N> k4 = rhs(axpy(y, h, k3));
  Vec<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

std::size_t step_count(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrate: dt must be > 0");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw std::invalid_argument("integrate: t_end must be > 0");
  }
  // Guard against t_end/dt landing a hair above an integer.
  const double ratio = t_end / dt;
  const double nearest = std::round(ratio);
  const double steps = std::abs(ratio - nearest) <= 1e-9 * ratio ? nearest : std::ceil(ratio);
  return static_cast<std::size_t>(std::max(1.0, steps));
}

template <std::size_t N>
void require_finite(const Vec<N>& v) {
  for (double c : v) {
    if (!std::isfinite(c)) throw std::invalid_argument("integrate: non-finite initial state");
  }
}

template <typename State>
std::string xy_svg(std::span<const Trajectory<State>> fan) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& tr : fan) {
    for (const auto& s : tr.states) {
      xmin = std::min(xmin, s.x);
      xmax = std::max(xmax, s.x);
      ymin = std::min(ymin, s.y);
      ymax = std::max(ymax, s.y);
    }
  }
  if (!std::isfinite(xmin)) xmin = xmax = ymin = ymax = 0.0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  constexpr double kSize = 600.0;
  constexpr double kMargin = 20.0;
  const double scale = (kSize - 2.0 * kMargin) / span;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
     << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < fan.size(); ++k) {
    const double hue = fan.size() > 1 ? 300.0 * static_cast<double>(k) / (fan.size() - 1) : 0.0;
    os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"hsl(" << hue
       << ",70%,40%)\" points=\"";
    const auto& states = fan[k].states;
    // At most ~2000 vertices per curve.
    const std::size_t stride = std::max<std::size_t>(1, states.size() / 2000);
    for (std::size_t i = 0; i < states.size(); i += stride) {
      const double px = kMargin + (states[i].x - xmin) * scale;
      const double py = kSize - kMargin - (states[i].y - ymin) * scale;  // y up
      os << px << ',' << py << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

double hamiltonian(const GeodesicState& s) { return 0.5 * (s.p1 * s.p1 + s.p2 * s.p2); }

double pendulum_energy(const ReducedState& s, double energy) {
  return 0.5 * s.gammadot * s.gammadot - energy * std::cos(s.gamma);
}

GeodesicState full_rhs(const GeodesicState& s) {
  return {
      .x = std::cos(s.theta) * s.p1,
      .y = std::sin(s.theta) * s.p1,
      .theta = s.p2,
      .p1 = s.p2 * s.p3,
      .p2 = -s.p1 * s.p3,
      .p3 = -s.p1 * s.p2,
  };
}

ReducedState reduced_rhs(const ReducedState& s, double energy) {
  if (!(energy >= 0.0)) throw std::invalid_argument("reduced_rhs: energy must be >= 0");
  const double root = std::sqrt(energy);
  const double forward = root * std::sin(0.5 * s.gamma);
  return {
      .x = forward * std::cos(s.theta),
      .y = forward * std::sin(s.theta),
      .theta = root * std::cos(0.5 * s.gamma),
      .gamma = s.gammadot,
      .gammadot = -energy * std::sin(s.gamma),
  };
}

CanonicalMomenta canonical_momenta(const GeodesicState& s) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  return {.px = s.p1 * c - s.p3 * sn, .py = s.p1 * sn + s.p3 * c, .ptheta = s.p2};
}

GeodesicState to_full(const ReducedState& s, double energy) {
  if (!(energy >= 0.0)) throw std::invalid_argument("to_full: energy must be >= 0");
  const double root = std::sqrt(energy);
  return {s.x, s.y, s.theta, root * std::sin(0.5 * s.gamma), root * std::cos(0.5 * s.gamma),
          0.5 * s.gammadot};
}

double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2pi.
  return r >= kTwoPi ? 0.0 : r;
}

double angle_difference(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  return d;
}

FullTrajectory integrate(const GeodesicState& initial, double t_end, double dt) {
  Vec<6> y = pack(initial);
  require_finite(y);
  const std::size_t steps = step_count(t_end, dt);
  y[2] = wrap_angle(y[2]);

  FullTrajectory out;
  out.energy = 2.0 * hamiltonian(initial);
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  out.times.push_back(0.0);
  out.states.push_back(unpack6(y));

  const auto rhs = [](const Vec<6>& v) { return pack(full_rhs(unpack6(v))); };
  for (std::size_t i = 1; i <= steps; ++i) {
    y = rk4_step(y, dt, rhs);
    y[2] = wrap_angle(y[2]);
    out.times.push_back(static_cast<double>(i) * dt);
    out.states.push_back(unpack6(y));
  }
  return out;
}

ReducedTrajectory integrate(const ReducedState& initial, double energy, double t_end,
                            double dt) {
  Vec<5> y = pack(initial);
  require_finite(y);
  if (!std::isfinite(energy) || energy < 0.0) {
    throw std::invalid_argument("integrate: energy must be finite and >= 0");
  }
  const std::size_t steps = step_count(t_end, dt);
  y[2] = wrap_angle(y[2]);

  ReducedTrajectory out;
  out.energy = energy;
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  out.times.push_back(0.0);
  out.states.push_back(unpack5(y));

  const auto rhs = [energy](const Vec<5>& v) { return pack(reduced_rhs(unpack5(v), energy)); };
  for (std::size_t i = 1; i <= steps; ++i) {
    y = rk4_step(y, dt, rhs);
    y[2] = wrap_angle(y[2]);
    out.times.push_back(static_cast<double>(i) * dt);
    out.states.push_back(unpack5(y));
  }
  return out;
}

std::vector<ReducedTrajectory> association_fan(double energy, std::span<const double> gammas,
                                               double t_end, double dt) {
  if (!std::isfinite(energy) || !(energy > 0.0)) {
    throw std::invalid_argument("association_fan: energy must be finite and > 0");
  }
  std::vector<ReducedTrajectory> fan;
  fan.reserve(gammas.size());
  for (double g : gammas) {
    fan.push_back(integrate(ReducedState{.gamma = g}, energy, t_end, dt));
  }
  return fan;
}

std::vector<double> fan_phases(int n) {
  if (n < 0) throw std::invalid_argument("fan_phases: n must be >= 0");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) out.push_back(kTwoPi * k / (n + 1));
  return out;
}

namespace {

void write_row(std::ostream& os, double t, const GeodesicState& s) {
  os << t << ',' << s.x << ',' << s.y << ',' << s.theta << '\n';
}

void write_row(std::ostream& os, double t, const ReducedState& s) {
  os << t << ',' << s.x << ',' << s.y << ',' << s.theta << ',' << s.gamma << ',' << s.gammadot
     << '\n';
}

constexpr const char* header_for(const GeodesicState*) { return "t,x,y,theta"; }
constexpr const char* header_for(const ReducedState*) { return "t,x,y,theta,gamma,gammadot"; }

template <typename State>
std::string single_csv(const Trajectory<State>& tr) {
  std::ostringstream os;
  os.precision(17);
  os << header_for(static_cast<const State*>(nullptr)) << '\n';
  for (std::size_t i = 0; i < tr.times.size(); ++i) write_row(os, tr.times[i], tr.states[i]);
  return os.str();
}

template <typename State>
std::string fan_csv(std::span<const Trajectory<State>> fan) {
  std::ostringstream os;
  os.precision(17);
  os << "curve," << header_for(static_cast<const State*>(nullptr)) << '\n';
  for (std::size_t k = 0; k < fan.size(); ++k) {
    for (std::size_t i = 0; i < fan[k].times.size(); ++i) {
      os << k << ',';
      write_row(os, fan[k].times[i], fan[k].states[i]);
    }
  }
  return os.str();
}

}  // namespace

std::string to_csv(const FullTrajectory& trajectory) { return single_csv(trajectory); }
std::string to_csv(const ReducedTrajectory& trajectory) { return single_csv(trajectory); }
std::string to_csv(std::span<const FullTrajectory> fan) { return fan_csv(fan); }
std::string to_csv(std::span<const ReducedTrajectory> fan) { return fan_csv(fan); }
std::string fan_svg(std::span<const FullTrajectory> fan) { return xy_svg(fan); }
std::string fan_svg(std::span<const ReducedTrajectory> fan) { return xy_svg(fan); }

}  // namespace bordernet::geodesy
