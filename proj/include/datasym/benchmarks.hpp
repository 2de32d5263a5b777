// Benchmark networks exposed behind the oracle interface: a room temperature
// network with nearest-neighbour heat exchange, and a vehicle chain.
#ifndef DATASYM_BENCHMARKS_HPP
#define DATASYM_BENCHMARKS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "datasym/oracle.hpp"

namespace datasym {

enum class RoomTopology { Ring, Line, Random };

struct RoomNetworkConfig {
  int M = 1;
  double gimel = 0.005;   // heat exchange with each neighbour
  double daleth = 0.01;   // wall coefficient toward the outside
  double beth = 0.06;     // cooler coefficient
  double T_c = 5.0;       // cooler temperature
  double T_e = -2.0;      // external temperature
  RoomTopology topology = RoomTopology::Ring;
  std::uint64_t topology_seed = 0;  // used by the random topology only
  std::vector<double> input_levels = {0.0, 1.0};

  double max_input() const;
  // Diagonal term 1 - 2*gimel - daleth - beth*u.
  double diagonal(double u) const { return 1.0 - 2.0 * gimel - daleth - beth * u; }
  void validate() const;
};

// w_i is the sum of the neighbour states selected by the topology. The
// adjacency is private to the returned oracle; nothing downstream reads it.
NetworkOracle make_room_network(const RoomNetworkConfig& cfg);

// Single room as an opaque subsystem with disturbance input w (neighbour sum).
SubsystemOracle make_room_subsystem(const RoomNetworkConfig& cfg);

struct VehicleNetworkConfig {
  int M = 1;
  double tau = 0.005;  // strength of interconnection
  std::vector<double> input_levels = {-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  void validate() const;
};

// Chain: w_1 = 0, w_i = x_{i-1} for i >= 2. Each step is
// [[1,-1],[0,1]] x + u + [[0,tau],[0,0]] w.
NetworkOracle make_vehicle_network(const VehicleNetworkConfig& cfg);
SubsystemOracle make_vehicle_subsystem(const VehicleNetworkConfig& cfg);

RoomTopology room_topology_from_string(const std::string& s);
std::string to_string(RoomTopology t);

}  // namespace datasym

#endif
