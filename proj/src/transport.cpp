#include "mleval/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "mleval/error.hpp"

namespace mleval {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Basis of the transportation simplex: exactly rows + cols - 1 basic cells
// forming a spanning tree over the bipartite row/column graph. Row nodes are
// 0..m-1, column nodes m..m+n-1.
class Basis {
 public:
  Basis(std::size_t m, std::size_t n) : m_(m), n_(n), basic_(m * n, false) {}

  bool is_basic(std::size_t i, std::size_t j) const { return basic_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, bool on) { basic_[i * n_ + j] = on; }

  // Adjacency of the tree, neighbours sorted ascending so traversals are
  // deterministic.
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(m_ + n_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (!is_basic(i, j)) continue;
        adj[i].push_back(m_ + j);
        adj[m_ + j].push_back(i);
      }
    }
    return adj;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<bool> basic_;
};

struct Potentials {
  std::vector<double> u;
  std::vector<double> v;
};

Potentials compute_potentials(const std::vector<std::vector<std::size_t>>& adj, const Matrix& costs) {
  const std::size_t m = costs.rows;
  const std::size_t n = costs.cols;
  Potentials p{std::vector<double>(m, 0.0), std::vector<double>(n, 0.0)};
  std::vector<bool> seen(m + n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const auto node = frontier.front();
    frontier.pop();
    for (const auto next : adj[node]) {
      if (seen[next]) continue;
      seen[next] = true;
      ++visited;
      if (node < m) {
        const std::size_t j = next - m;
        p.v[j] = costs(node, j) - p.u[node];
      } else {
        const std::size_t j = node - m;
        p.u[next] = costs(next, j) - p.v[j];
      }
      frontier.push(next);
    }
  }
  if (visited != m + n) throw Error(Errc::NumericalFailure, "transport basis is not a spanning tree");
  return p;
}

// Tree path from `from` to `to` as a node sequence.
std::vector<std::size_t> tree_path(const std::vector<std::vector<std::size_t>>& adj, std::size_t from,
                                   std::size_t to) {
  std::vector<std::size_t> parent(adj.size(), kNone);
  std::queue<std::size_t> frontier;
  frontier.push(from);
  parent[from] = from;
  while (!frontier.empty() && parent[to] == kNone) {
    const auto node = frontier.front();
    frontier.pop();
    for (const auto next : adj[node]) {
      if (parent[next] != kNone) continue;
      parent[next] = node;
      frontier.push(next);
    }
  }
  if (parent[to] == kNone) throw Error(Errc::NumericalFailure, "no tree path for entering cell");
  std::vector<std::size_t> path;
  for (auto node = to; node != from; node = parent[node]) path.push_back(node);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

void validate(std::span<const double> supply, std::span<const double> demand, const Matrix& costs) {
  if (supply.empty() || demand.empty()) throw Error(Errc::InvalidArgument, "transport problem with an empty side");
  if (costs.rows != supply.size() || costs.cols != demand.size()) {
    throw Error(Errc::InvalidArgument, "cost matrix is " + std::to_string(costs.rows) + "x" +
                                           std::to_string(costs.cols) + ", marginals are " +
                                           std::to_string(supply.size()) + "x" + std::to_string(demand.size()));
  }
  auto check_weights = [](std::span<const double> w, const char* side) {
    for (double x : w) {
      if (!std::isfinite(x) || x < 0.0) {
        throw Error(Errc::InvalidArgument, std::string(side) + " weight " + std::to_string(x) + " is invalid");
      }
    }
  };
  check_weights(supply, "supply");
  check_weights(demand, "demand");
  for (double c : costs.values) {
    if (!std::isfinite(c) || c < 0.0) throw Error(Errc::InvalidArgument, "cost " + std::to_string(c) + " is invalid");
  }
  double total_supply = 0.0;
  double total_demand = 0.0;
  for (double x : supply) total_supply += x;
  for (double x : demand) total_demand += x;
  if (std::fabs(total_supply - total_demand) > kMarginalTolerance) {
    throw Error(Errc::InfeasibleMarginals,
                "supply totals " + std::to_string(total_supply) + ", demand totals " + std::to_string(total_demand));
  }
}

}  // namespace

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand, const Matrix& costs) {
  validate(supply, demand, costs);
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();

  TransportPlan plan;
  plan.flow = Matrix(m, n, 0.0);
  Basis basis(m, n);

  // North-west corner: advances one row or one column per step, so it always
  // yields exactly m + n - 1 basic cells, some possibly at zero flow.
  {
    std::vector<double> rs(supply.begin(), supply.end());
    std::vector<double> rd(demand.begin(), demand.end());
    std::size_t i = 0;
    std::size_t j = 0;
    while (true) {
      const double x = std::min(rs[i], rd[j]);
      plan.flow(i, j) = x;
      basis.set(i, j, true);
      rs[i] -= x;
      rd[j] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) {
        ++j;
      } else if (j == n - 1 || rs[i] <= rd[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  double max_cost = 0.0;
  for (double c : costs.values) max_cost = std::max(max_cost, c);
  const double eps = 1e-12 * (1.0 + max_cost);
  const std::size_t degenerate_limit = 2 * (m + n);
  const std::size_t pivot_budget = 50 * (m + n) * (m + n) + 1000;

  bool bland = false;
  std::size_t degenerate_run = 0;
  while (true) {
    const auto adj = basis.adjacency();
    const auto pot = compute_potentials(adj, costs);

    std::size_t enter_i = kNone;
    std::size_t enter_j = kNone;
    double best = -eps;
    for (std::size_t i = 0; i < m && !(bland && enter_i != kNone); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (basis.is_basic(i, j)) continue;
        const double reduced = costs(i, j) - pot.u[i] - pot.v[j];
        if (reduced < best) {
          enter_i = i;
          enter_j = j;
          if (bland) break;
          best = reduced;
        }
      }
    }
    if (enter_i == kNone) break;
    if (plan.pivots++ >= pivot_budget) {
      throw Error(Errc::NumericalFailure, "transport simplex exceeded " + std::to_string(pivot_budget) + " pivots");
    }

    // Cycle: the entering cell (+), then the tree path from its column back
    // to its row, alternating (-), (+), ... ; the path has odd length.
    const auto path = tree_path(adj, enter_i, m + enter_j);
    struct Cell {
      std::size_t i;
      std::size_t j;
    };
    std::vector<Cell> minus;
    std::vector<Cell> plus;
    for (std::size_t k = path.size() - 1; k >= 1; --k) {
      const auto a = path[k - 1];
      const auto b = path[k];
      const Cell cell = a < m ? Cell{a, b - m} : Cell{b, a - m};
      // Edge nearest the entering column is a (-) cell.
      if ((path.size() - 1 - k) % 2 == 0) {
        minus.push_back(cell);
      } else {
        plus.push_back(cell);
      }
    }

    Cell leaving = minus.front();
    double theta = plan.flow(leaving.i, leaving.j);
    for (const auto& cell : minus) {
      const double f = plan.flow(cell.i, cell.j);
      const bool lower_index = cell.i * n + cell.j < leaving.i * n + leaving.j;
      if (f < theta || (f == theta && lower_index)) {
        theta = f;
        leaving = cell;
      }
    }

    plan.flow(enter_i, enter_j) += theta;
    for (const auto& cell : plus) plan.flow(cell.i, cell.j) += theta;
    for (const auto& cell : minus) plan.flow(cell.i, cell.j) = std::max(0.0, plan.flow(cell.i, cell.j) - theta);
    plan.flow(leaving.i, leaving.j) = 0.0;
    basis.set(leaving.i, leaving.j, false);
    basis.set(enter_i, enter_j, true);

    if (theta <= 0.0) {
      if (++degenerate_run >= degenerate_limit) bland = true;
    } else {
      degenerate_run = 0;
    }
  }

  double objective = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) objective += plan.flow(i, j) * costs(i, j);
  }
  plan.objective = objective;
  return plan;
}

}  // namespace mleval
