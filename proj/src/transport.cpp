#include "kaclab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kaclab/error.hpp"

namespace kaclab {

namespace {

struct Tree {
  std::size_t m, n;
  std::vector<std::size_t> arc_row, arc_col;
  std::vector<double> flow;
  std::vector<std::vector<std::size_t>> adj;  // node -> arc ids
  std::vector<double> pot;                    // u for rows, v for cols
  std::vector<std::size_t> parent_arc, depth;
  std::vector<std::size_t> queue;

  std::size_t node_of_col(std::size_t j) const { return m + j; }

  void add_arc(std::size_t id, std::size_t i, std::size_t j, double x) {
    arc_row[id] = i;
    arc_col[id] = j;
    flow[id] = x;
    adj[i].push_back(id);
    adj[m + j].push_back(id);
  }
  void drop_arc(std::size_t id) {
    for (std::size_t node : {arc_row[id], m + arc_col[id]}) {
      auto& a = adj[node];
      auto it = std::find(a.begin(), a.end(), id);
      *it = a.back();
      a.pop_back();
    }
  }

  void rebuild(std::span<const double> cost) {
    const std::size_t none = static_cast<std::size_t>(-1);
    std::fill(depth.begin(), depth.end(), none);
    queue.clear();
    queue.push_back(0);
    depth[0] = 0;
    pot[0] = 0.0;
    parent_arc[0] = none;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      std::size_t u = queue[q];
      for (std::size_t id : adj[u]) {
        std::size_t r = arc_row[id], c = m + arc_col[id];
        std::size_t other = (u == r) ? c : r;
        if (depth[other] != none) continue;
        depth[other] = depth[u] + 1;
        parent_arc[other] = id;
        double cij = cost[arc_row[id] * n + arc_col[id]];
        pot[other] = (other == c) ? cij - pot[r] : cij - pot[c];
        queue.push_back(other);
      }
    }
    if (queue.size() != m + n) throw SimulationError("transport: basis is not a spanning tree");
  }

  std::size_t other_end(std::size_t id, std::size_t node) const {
    return node == arc_row[id] ? m + arc_col[id] : arc_row[id];
  }
};

}  // namespace

TransportResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                                std::span<const double> cost) {
  const std::size_t m = supply.size(), n = demand.size();
  if (m == 0 || n == 0) throw std::invalid_argument("transport: empty side");
  if (cost.size() != m * n) throw std::invalid_argument("transport: cost matrix size mismatch");

  Tree t;
  t.m = m;
  t.n = n;
  const std::size_t narcs = m + n - 1;
  t.arc_row.resize(narcs);
  t.arc_col.resize(narcs);
  t.flow.resize(narcs);
  t.adj.resize(m + n);
  t.pot.resize(m + n);
  t.parent_arc.resize(m + n);
  t.depth.resize(m + n);

  // northwest corner
  std::vector<double> a(supply.begin(), supply.end()), b(demand.begin(), demand.end());
  std::size_t i = 0, j = 0, id = 0;
  for (;;) {
    double x = std::min(a[i], b[j]);
    t.add_arc(id++, i, j, x);
    a[i] -= x;
    b[j] -= x;
    if (i == m - 1 && j == n - 1) break;
    if (i == m - 1)
      ++j;
    else if (j == n - 1)
      ++i;
    else if (a[i] == 0.0)
      ++i;
    else
      ++j;
  }
  t.rebuild(cost);

  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, std::abs(c));
  const double eps = 1e-13 * (1.0 + cmax);

  const std::size_t total = m * n;
  const std::size_t block = std::max<std::size_t>(std::min<std::size_t>(total, 64),
                                                  static_cast<std::size_t>(std::sqrt(double(total))));
  std::size_t cursor = 0;
  std::size_t pivots = 0;
  const std::size_t max_pivots = 200 * (m + n) + 100000;

  std::vector<std::size_t> path_i, path_j;
  for (;;) {
    // block search for the entering cell
    double best = -eps;
    std::size_t best_cell = total;
    std::size_t scanned = 0;
    while (scanned < total) {
      std::size_t end = std::min(scanned + block, total);
      for (; scanned < end; ++scanned) {
        std::size_t cell = cursor;
        if (++cursor == total) cursor = 0;
        std::size_t r = cell / n, c = cell % n;
        double red = cost[cell] - t.pot[r] - t.pot[m + c];
        if (red < best) {
          best = red;
          best_cell = cell;
        }
      }
      if (best_cell != total) break;
    }
    if (best_cell == total) break;
    if (++pivots > max_pivots) throw SimulationError("transport: pivot limit exceeded");

    std::size_t er = best_cell / n, ec = best_cell % n;
    // tree path between row node er and column node m+ec
    path_i.clear();
    path_j.clear();
    std::size_t x = er, y = m + ec;
    while (t.depth[x] > t.depth[y]) {
      path_i.push_back(t.parent_arc[x]);
      x = t.other_end(t.parent_arc[x], x);
    }
    while (t.depth[y] > t.depth[x]) {
      path_j.push_back(t.parent_arc[y]);
      y = t.other_end(t.parent_arc[y], y);
    }
    while (x != y) {
      path_i.push_back(t.parent_arc[x]);
      x = t.other_end(t.parent_arc[x], x);
      path_j.push_back(t.parent_arc[y]);
      y = t.other_end(t.parent_arc[y], y);
    }
    // cycle: entering (+), then from the column end back to the row end
    std::vector<std::size_t>& cyc = path_j;
    for (auto it = path_i.rbegin(); it != path_i.rend(); ++it) cyc.push_back(*it);
    double theta = INFINITY;
    std::size_t leave = 0;
    for (std::size_t k = 0; k < cyc.size(); k += 2)
      if (t.flow[cyc[k]] < theta) {
        theta = t.flow[cyc[k]];
        leave = cyc[k];
      }
    for (std::size_t k = 0; k < cyc.size(); ++k) {
      if (k % 2 == 0)
        t.flow[cyc[k]] -= theta;
      else
        t.flow[cyc[k]] += theta;
    }
    t.drop_arc(leave);
    t.add_arc(leave, er, ec, theta);
    t.rebuild(cost);
  }

  TransportResult res;
  res.pivots = pivots;
  for (std::size_t k = 0; k < narcs; ++k) res.cost += std::max(t.flow[k], 0.0) * cost[t.arc_row[k] * n + t.arc_col[k]];
  for (std::size_t r = 0; r < m; ++r) res.dual_value += supply[r] * t.pot[r];
  for (std::size_t c = 0; c < n; ++c) res.dual_value += demand[c] * t.pot[m + c];
  return res;
}

}  // namespace kaclab
