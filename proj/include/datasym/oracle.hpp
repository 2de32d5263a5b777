// Opaque one-step simulation oracles. Everything downstream of this header
// sees subsystems only through (x, u, w) -> x+ queries.
#ifndef DATASYM_ORACLE_HPP
#define DATASYM_ORACLE_HPP

#include <functional>
#include <memory>
#include <vector>

#include "datasym/types.hpp"

namespace datasym {

struct SubsystemOracle {
  int state_dim = 0;
  int dist_dim = 0;
  std::vector<Vec> input_set;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> step_fn;

  const Vec& input(int u_index) const {
    if (u_index < 0 || u_index >= static_cast<int>(input_set.size()))
      throw IndexError("oracle: input index out of range");
    return input_set[static_cast<std::size_t>(u_index)];
  }

  int input_index_of(const Vec& u) const {
    for (std::size_t j = 0; j < input_set.size(); ++j)
      if (input_set[j].size() == u.size() && input_set[j] == u) return static_cast<int>(j);
    return -1;
  }
};

// Checks dimensions and input-set membership, then evaluates the map.
Vec step_subsystem(const SubsystemOracle& oracle, const Vec& x, const Vec& u, const Vec& w);

// Raw query used by table construction and sampling, where u is already a
// member of the oracle's input set by index.
inline Vec step_raw(const SubsystemOracle& oracle, const Vec& x, int u_index, const Vec& w) {
  return oracle.step_fn(x, oracle.input(u_index), w);
}

struct NetworkOracle {
  std::vector<SubsystemOracle> subsystems;
  // (x_1,...,x_M) -> (w_1,...,w_M)
  std::function<std::vector<Vec>(const std::vector<Vec>&)> interconnection;

  int size() const { return static_cast<int>(subsystems.size()); }
  int state_dim() const {
    int n = 0;
    for (const auto& s : subsystems) n += s.state_dim;
    return n;
  }

  std::vector<Vec> split_state(const Vec& x) const;
  std::vector<Vec> split_input(const Vec& u) const;
  static Vec stack(const std::vector<Vec>& parts);
};

Vec step_network(const NetworkOracle& network, const Vec& x, const Vec& u);

}  // namespace datasym

#endif
