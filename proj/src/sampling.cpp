#include "datasym/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "datasym/grid.hpp"
#include "datasym/parallel.hpp"
#include "datasym/rng.hpp"

namespace datasym {

namespace {

Box joint_box(const Box& x_box, const Box& w_box) {
  Vec lo(x_box.dim() + w_box.dim()), hi(x_box.dim() + w_box.dim());
  lo << x_box.lower, w_box.lower;
  hi << x_box.upper, w_box.upper;
  return Box(lo, hi);
}

std::vector<Vec> joint_points(const Box& joint, int n, SamplingStrategy strategy, std::uint64_t seed) {
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(n));
  switch (strategy) {
    case SamplingStrategy::UniformRandom: {
      Rng rng(derive_seed(seed, 0x5a3b));
      for (int z = 0; z < n; ++z) pts.push_back(rng.in_box(joint));
      break;
    }
    case SamplingStrategy::LowDiscrepancy: {
      Halton seq(joint.dim(), seed);
      for (int z = 0; z < n; ++z) pts.push_back(seq.next_in(joint));
      break;
    }
    case SamplingStrategy::Grid: {
      const int d = joint.dim();
      const int per_axis = static_cast<int>(std::llround(std::pow(static_cast<double>(n), 1.0 / d)));
      std::int64_t total = 1;
      for (int k = 0; k < d; ++k) total *= per_axis;
      if (per_axis < 1 || total != n)
        throw ConfigError("collect: grid strategy needs n_per_input = p^dim for integer p");
      UniformGrid lattice(joint, std::vector<int>(static_cast<std::size_t>(d), per_axis));
      for (std::int64_t c = 0; c < lattice.size(); ++c) pts.push_back(lattice.representative(c));
      break;
    }
  }
  return pts;
}

}  // namespace

int Dataset::count_for_input(int u_index) const {
  int n = 0;
  for (const auto& p : pairs)
    if (p.u_index == u_index) ++n;
  return n;
}

void Dataset::validate_coverage(int n_inputs) const {
  for (int j = 0; j < n_inputs; ++j)
    if (count_for_input(j) == 0)
      throw IncompleteDatasetError("dataset: no samples for input index " + std::to_string(j));
}

Dataset collect(const SubsystemOracle& oracle, const Box& x_box, const Box& w_box, int n_per_input,
                SamplingStrategy strategy, std::uint64_t seed) {
  if (n_per_input < 1) throw ConfigError("collect: n_per_input must be >= 1");
  if (x_box.dim() != oracle.state_dim || w_box.dim() != oracle.dist_dim)
    throw ShapeError("collect: box dimensions do not match the oracle");

  Dataset ds;
  ds.seed = seed;
  ds.strategy = strategy;
  ds.x_box = x_box;
  ds.w_box = w_box;
  ds.n_inputs = static_cast<int>(oracle.input_set.size());

  const auto pts = joint_points(joint_box(x_box, w_box), n_per_input, strategy, seed);
  const int nx = x_box.dim();
  ds.pairs.reserve(pts.size() * oracle.input_set.size());
  for (int u = 0; u < static_cast<int>(oracle.input_set.size()); ++u) {
    for (const Vec& p : pts) {
      SamplePair sp;
      sp.x = p.head(nx);
      sp.w = p.tail(w_box.dim());
      sp.u_index = u;
      try {
        sp.x_next = step_raw(oracle, sp.x, u, sp.w);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "collect: oracle failure at u_index=" << u << " x=[" << sp.x.transpose() << "] w=["
           << sp.w.transpose() << "]: " << e.what();
        throw Error(os.str());
      }
      ds.pairs.push_back(std::move(sp));
    }
  }
  return ds;
}

std::vector<int> default_eval_points(const std::vector<int>& x_cells, const std::vector<int>& w_cells) {
  std::vector<int> pts;
  for (int c : x_cells) pts.push_back(4 * c + 1);
  for (int c : w_cells) pts.push_back(4 * c + 1);
  return pts;
}

CoverageReport compute_sigma(const Dataset& dataset, const Box& x_box, const Box& w_box,
                             const std::vector<int>& eval_points_per_axis) {
  const Box joint = joint_box(x_box, w_box);
  const int d = joint.dim();
  if (static_cast<int>(eval_points_per_axis.size()) != d)
    throw ConfigError("sigma: eval_points_per_axis dimension mismatch");
  for (int p : eval_points_per_axis)
    if (p < 1) throw ConfigError("sigma: eval points per axis must be >= 1");

  // Group sample positions by input; identical groups are evaluated once.
  int n_inputs = dataset.n_inputs;
  for (const auto& p : dataset.pairs) n_inputs = std::max(n_inputs, p.u_index + 1);
  if (n_inputs == 0) throw IncompleteDatasetError("sigma: empty dataset");
  dataset.validate_coverage(n_inputs);

  std::vector<std::vector<Vec>> groups(static_cast<std::size_t>(n_inputs));
  for (const auto& p : dataset.pairs) {
    Vec joint_pt(d);
    joint_pt << p.x, p.w;
    groups[static_cast<std::size_t>(p.u_index)].push_back(std::move(joint_pt));
  }

  std::vector<int> group_rep(static_cast<std::size_t>(n_inputs));
  auto same_group = [&groups](int a, int b) {
    if (groups[a].size() != groups[b].size()) return false;
    for (std::size_t z = 0; z < groups[a].size(); ++z)
      if (groups[a][z] != groups[b][z]) return false;
    return true;
  };
  for (int u = 0; u < n_inputs; ++u) {
    group_rep[u] = u;
    for (int v = 0; v < u; ++v)
      if (group_rep[v] == v && same_group(u, v)) {
        group_rep[u] = v;
        break;
      }
  }

  // Inclusive lattice: corners of the joint box are evaluation points.
  std::int64_t total = 1;
  std::vector<std::int64_t> strides(static_cast<std::size_t>(d), 1);
  for (int k = d - 1; k >= 0; --k) {
    strides[k] = total;
    total *= eval_points_per_axis[k];
  }
  auto eval_point = [&](std::int64_t idx) {
    Vec p(d);
    for (int k = 0; k < d; ++k) {
      const int n = eval_points_per_axis[k];
      const std::int64_t a = (idx / strides[k]) % n;
      p[k] = (n == 1) ? 0.5 * (joint.lower[k] + joint.upper[k])
                      : joint.lower[k] + (joint.upper[k] - joint.lower[k]) * static_cast<double>(a) /
                            static_cast<double>(n - 1);
    }
    return p;
  };

  CoverageReport report;
  report.eval_points_per_axis = eval_points_per_axis;
  double slack2 = 0.0;
  for (int k = 0; k < d; ++k) {
    const int n = eval_points_per_axis[k];
    const double step = (n == 1) ? (joint.upper[k] - joint.lower[k]) : (joint.upper[k] - joint.lower[k]) / (n - 1);
    slack2 += 0.25 * step * step;
  }
  report.slack = std::sqrt(slack2);

  double best = -1.0;
  std::int64_t best_idx = 0;
  int best_u = 0;
  for (int u = 0; u < n_inputs; ++u) {
    if (group_rep[u] != u) continue;
    const auto& samples = groups[static_cast<std::size_t>(u)];
    const int chunks = std::max(1, thread_count());
    std::vector<double> chunk_best(chunks, -1.0);
    std::vector<std::int64_t> chunk_idx(chunks, 0);
    const std::int64_t chunk_size = (total + chunks - 1) / chunks;
    parallel_for(chunks, [&](std::int64_t c) {
      const std::int64_t lo = c * chunk_size, hi = std::min(total, lo + chunk_size);
      double local_best = -1.0;
      std::int64_t local_idx = 0;
      for (std::int64_t i = lo; i < hi; ++i) {
        const Vec p = eval_point(i);
        double dmin = std::numeric_limits<double>::infinity();
        for (const Vec& s : samples) dmin = std::min(dmin, (p - s).norm());
        if (dmin > local_best) {
          local_best = dmin;
          local_idx = i;
        }
      }
      chunk_best[c] = local_best;
      chunk_idx[c] = local_idx;
    });
    for (int c = 0; c < chunks; ++c) {
      // Ties resolved toward the smaller lattice index for determinism.
      if (chunk_best[c] > best || (chunk_best[c] == best && chunk_idx[c] < best_idx)) {
        best = chunk_best[c];
        best_idx = chunk_idx[c];
        best_u = u;
      }
    }
  }

  report.sigma = best;
  report.sigma_conservative = best + report.slack;
  report.argmax_point = eval_point(best_idx);
  report.argmax_u = best_u;
  return report;
}

std::string to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::UniformRandom: return "uniform-random";
    case SamplingStrategy::LowDiscrepancy: return "low-discrepancy";
    case SamplingStrategy::Grid: return "grid";
  }
  return "low-discrepancy";
}

SamplingStrategy strategy_from_string(const std::string& s) {
  if (s == "uniform-random" || s == "random") return SamplingStrategy::UniformRandom;
  if (s == "low-discrepancy" || s == "halton") return SamplingStrategy::LowDiscrepancy;
  if (s == "grid") return SamplingStrategy::Grid;
  throw ConfigError("sampling: unknown strategy '" + s + "'");
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

nlohmann::ordered_json box_to_json(const Box& b) {
  nlohmann::ordered_json j;
  j["lower"] = std::vector<double>(b.lower.data(), b.lower.data() + b.lower.size());
  j["upper"] = std::vector<double>(b.upper.data(), b.upper.data() + b.upper.size());
  return j;
}

Box box_from_json(const nlohmann::json& j) {
  const auto lo = j.at("lower").get<std::vector<double>>();
  const auto hi = j.at("upper").get<std::vector<double>>();
  return Box(Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
             Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size())));
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& csv_path) {
  const int n = dataset.x_box.dim();
  const int p = dataset.w_box.dim();
  std::ostringstream os;
  for (int k = 0; k < n; ++k) os << "x_" << k << ",";
  os << "u_index";
  for (int k = 0; k < p; ++k) os << ",w_" << k;
  for (int k = 0; k < n; ++k) os << ",xnext_" << k;
  os << "\n";
  for (const auto& sp : dataset.pairs) {
    for (int k = 0; k < n; ++k) os << format_double(sp.x[k]) << ",";
    os << sp.u_index;
    for (int k = 0; k < p; ++k) os << "," << format_double(sp.w[k]);
    for (int k = 0; k < n; ++k) os << "," << format_double(sp.x_next[k]);
    os << "\n";
  }
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw IoError("dataset: cannot write " + csv_path);
  out << os.str();

  nlohmann::ordered_json meta;
  meta["subsystem_id"] = dataset.subsystem_id;
  meta["seed"] = dataset.seed;
  meta["strategy"] = to_string(dataset.strategy);
  meta["n_inputs"] = dataset.n_inputs;
  meta["x_box"] = box_to_json(dataset.x_box);
  meta["w_box"] = box_to_json(dataset.w_box);
  meta["pairs"] = dataset.pairs.size();
  std::ofstream mout(csv_path + ".meta.json", std::ios::binary);
  if (!mout) throw IoError("dataset: cannot write " + csv_path + ".meta.json");
  mout << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& csv_path) {
  std::ifstream min(csv_path + ".meta.json");
  if (!min) throw IoError("dataset: cannot read " + csv_path + ".meta.json");
  nlohmann::json meta = nlohmann::json::parse(min);

  Dataset ds;
  ds.subsystem_id = meta.at("subsystem_id").get<int>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.strategy = strategy_from_string(meta.at("strategy").get<std::string>());
  ds.n_inputs = meta.value("n_inputs", 0);
  ds.x_box = box_from_json(meta.at("x_box"));
  ds.w_box = box_from_json(meta.at("w_box"));

  std::ifstream in(csv_path);
  if (!in) throw IoError("dataset: cannot read " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset: empty csv " + csv_path);
  const int n = ds.x_box.dim();
  const int p = ds.w_box.dim();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != 2 * n + p + 1) throw IoError("dataset: malformed row in " + csv_path);
    SamplePair sp;
    sp.x = Eigen::Map<const Vec>(vals.data(), n);
    sp.u_index = static_cast<int>(vals[static_cast<std::size_t>(n)]);
    sp.w = Eigen::Map<const Vec>(vals.data() + n + 1, p);
    sp.x_next = Eigen::Map<const Vec>(vals.data() + n + 1 + p, n);
    ds.pairs.push_back(std::move(sp));
  }
  return ds;
}

}  // namespace datasym
