#include "datasym/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "datasym/rng.hpp"

namespace datasym {

Vec step_subsystem(const SubsystemOracle& oracle, const Vec& x, const Vec& u, const Vec& w) {
  if (x.size() != oracle.state_dim) throw ShapeError("step: state dimension mismatch");
  if (w.size() != oracle.dist_dim) throw ShapeError("step: disturbance dimension mismatch");
  if (oracle.input_index_of(u) < 0) throw InvalidInputError("step: input not in the input set");
  return oracle.step_fn(x, u, w);
}

std::vector<Vec> NetworkOracle::split_state(const Vec& x) const {
  std::vector<Vec> parts;
  parts.reserve(subsystems.size());
  Eigen::Index off = 0;
  for (const auto& s : subsystems) {
    if (off + s.state_dim > x.size()) throw ShapeError("network: stacked state too short");
    parts.push_back(x.segment(off, s.state_dim));
    off += s.state_dim;
  }
  if (off != x.size()) throw ShapeError("network: stacked state too long");
  return parts;
}

std::vector<Vec> NetworkOracle::split_input(const Vec& u) const {
  std::vector<Vec> parts;
  parts.reserve(subsystems.size());
  Eigen::Index off = 0;
  for (const auto& s : subsystems) {
    const Eigen::Index m = s.input_set.empty() ? 0 : s.input_set.front().size();
    if (off + m > u.size()) throw ShapeError("network: stacked input too short");
    parts.push_back(u.segment(off, m));
    off += m;
  }
  if (off != u.size()) throw ShapeError("network: stacked input too long");
  return parts;
}

Vec NetworkOracle::stack(const std::vector<Vec>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vec x(n);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    x.segment(off, p.size()) = p;
    off += p.size();
  }
  return x;
}

Vec step_network(const NetworkOracle& network, const Vec& x, const Vec& u) {
  const auto states = network.split_state(x);
  const auto inputs = network.split_input(u);
  const auto dists = network.interconnection(states);
  if (dists.size() != network.subsystems.size()) throw ShapeError("network: interconnection arity mismatch");
  std::vector<Vec> next(network.subsystems.size());
  for (std::size_t i = 0; i < network.subsystems.size(); ++i)
    next[i] = step_subsystem(network.subsystems[i], states[i], inputs[i], dists[i]);
  return NetworkOracle::stack(next);
}

double RoomNetworkConfig::max_input() const {
  double m = 0.0;
  for (double u : input_levels) m = std::max(m, u);
  return m;
}

void RoomNetworkConfig::validate() const {
  if (M < 1) throw ConfigError("room: M must be >= 1");
  if (input_levels.empty()) throw ConfigError("room: empty input set");
  const double a = diagonal(max_input());
  if (!(a > 0.0 && a < 1.0))
    throw ConfigError("room: 1 - 2*gimel - daleth - beth*max(U) must lie in (0,1)");
}

SubsystemOracle make_room_subsystem(const RoomNetworkConfig& cfg) {
  cfg.validate();
  SubsystemOracle o;
  o.state_dim = 1;
  o.dist_dim = 1;
  for (double u : cfg.input_levels) o.input_set.push_back(Vec::Constant(1, u));
  const double gimel = cfg.gimel, daleth = cfg.daleth, beth = cfg.beth;
  const double tc = cfg.T_c, te = cfg.T_e;
  o.step_fn = [gimel, daleth, beth, tc, te](const Vec& x, const Vec& u, const Vec& w) {
    const double a = 1.0 - 2.0 * gimel - daleth - beth * u[0];
    Vec next(1);
    next[0] = a * x[0] + gimel * w[0] + beth * tc * u[0] + daleth * te;
    return next;
  };
  return o;
}

namespace {

// Neighbour lists with degree <= 2. Ring: i +- 1 (deduplicated for M <= 2);
// line drops the wrap-around edges; random keeps each ring edge with
// probability 1/2 under the topology seed.
std::vector<std::vector<int>> room_neighbours(const RoomNetworkConfig& cfg) {
  std::vector<std::vector<int>> nbr(cfg.M);
  if (cfg.M == 1) return nbr;
  auto add_edge = [&nbr](int i, int j) {
    nbr[i].push_back(j);
    nbr[j].push_back(i);
  };
  switch (cfg.topology) {
    case RoomTopology::Ring:
      for (int i = 0; i + 1 < cfg.M; ++i) add_edge(i, i + 1);
      if (cfg.M > 2) add_edge(cfg.M - 1, 0);
      break;
    case RoomTopology::Line:
      for (int i = 0; i + 1 < cfg.M; ++i) add_edge(i, i + 1);
      break;
    case RoomTopology::Random: {
      Rng rng(derive_seed(cfg.topology_seed, 0x700f));
      for (int i = 0; i + 1 < cfg.M; ++i)
        if (rng.unit() < 0.5) add_edge(i, i + 1);
      if (cfg.M > 2 && rng.unit() < 0.5) add_edge(cfg.M - 1, 0);
      break;
    }
  }
  for (auto& v : nbr) std::sort(v.begin(), v.end());
  return nbr;
}

}  // namespace

NetworkOracle make_room_network(const RoomNetworkConfig& cfg) {
  cfg.validate();
  NetworkOracle net;
  net.subsystems.assign(cfg.M, make_room_subsystem(cfg));
  auto nbr = room_neighbours(cfg);
  net.interconnection = [nbr](const std::vector<Vec>& states) {
    std::vector<Vec> w(states.size(), Vec::Zero(1));
    for (std::size_t i = 0; i < states.size(); ++i)
      for (int j : nbr[i]) w[i][0] += states[static_cast<std::size_t>(j)][0];
    return w;
  };
  return net;
}

void VehicleNetworkConfig::validate() const {
  if (M < 1) throw ConfigError("vehicle: M must be >= 1");
  if (input_levels.empty()) throw ConfigError("vehicle: empty input levels");
}

SubsystemOracle make_vehicle_subsystem(const VehicleNetworkConfig& cfg) {
  cfg.validate();
  SubsystemOracle o;
  o.state_dim = 2;
  o.dist_dim = 2;
  for (double u1 : cfg.input_levels)
    for (double u2 : cfg.input_levels) {
      Vec u(2);
      u << u1, u2;
      o.input_set.push_back(u);
    }
  const double tau = cfg.tau;
  o.step_fn = [tau](const Vec& x, const Vec& u, const Vec& w) {
    Vec next(2);
    next[0] = x[0] - x[1] + u[0] + tau * w[1];
    next[1] = x[1] + u[1];
    return next;
  };
  return o;
}

NetworkOracle make_vehicle_network(const VehicleNetworkConfig& cfg) {
  cfg.validate();
  NetworkOracle net;
  net.subsystems.assign(cfg.M, make_vehicle_subsystem(cfg));
  net.interconnection = [](const std::vector<Vec>& states) {
    std::vector<Vec> w(states.size(), Vec::Zero(2));
    for (std::size_t i = 1; i < states.size(); ++i) w[i] = states[i - 1];
    return w;
  };
  return net;
}

RoomTopology room_topology_from_string(const std::string& s) {
  if (s == "ring") return RoomTopology::Ring;
  if (s == "line") return RoomTopology::Line;
  if (s == "random") return RoomTopology::Random;
  throw ConfigError("room: unknown topology '" + s + "'");
}

std::string to_string(RoomTopology t) {
  switch (t) {
    case RoomTopology::Ring: return "ring";
    case RoomTopology::Line: return "line";
    case RoomTopology::Random: return "random";
  }
  return "ring";
}

}  // namespace datasym
