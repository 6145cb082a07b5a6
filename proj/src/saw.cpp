#include "hflab/saw.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace hflab {

namespace {

double walk_budget(int dim, int n_max) {
  // total DFS nodes are bounded by sum_N 2d (2d-1)^{N-1}
  double total = 1.0;
  double layer = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    layer *= (n == 1) ? 2.0 * dim : 2.0 * dim - 1.0;
    total += layer;
  }
  return total;
}

struct DfsState {
  int dim;
  int n_max;
  long long side;              // 2 n_max + 1
  std::vector<char> visited;   // flat offset grid
  std::vector<long long> stride;
  std::vector<std::uint64_t>* counts;
  std::vector<std::vector<std::uint64_t>>* endpoints;
};

void dfs(DfsState& st, std::vector<int>& pos, long long flat, int depth) {
  if (st.endpoints)
    (*st.endpoints)[static_cast<std::size_t>(depth)]
                   [static_cast<std::size_t>(flat)] += 1;
  if (depth == st.n_max) return;
  for (int i = 0; i < st.dim; ++i) {
    for (int s = -1; s <= 1; s += 2) {
      const int c = pos[static_cast<std::size_t>(i)] + s;
      if (c < -st.n_max || c > st.n_max) continue;
      const long long nf = flat + s * st.stride[static_cast<std::size_t>(i)];
      if (st.visited[static_cast<std::size_t>(nf)]) continue;
      st.visited[static_cast<std::size_t>(nf)] = 1;
      pos[static_cast<std::size_t>(i)] = c;
      (*st.counts)[static_cast<std::size_t>(depth + 1)] += 1;
      dfs(st, pos, nf, depth + 1);
      pos[static_cast<std::size_t>(i)] = c - s;
      st.visited[static_cast<std::size_t>(nf)] = 0;
    }
  }
}

}  // namespace

SawTable saw_enumerate(int dim, int n_max, bool with_endpoints,
                       double node_budget) {
  if (dim < 1 || n_max < 0) throw std::invalid_argument("saw_enumerate: bad args");
  if (walk_budget(dim, n_max) > node_budget)
    throw std::length_error("saw_enumerate: budget exceeded");

  SawTable t;
  t.dim = dim;
  t.n_max = n_max;
  t.counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  t.counts[0] = 1;

  const long long side = 2LL * n_max + 1;
  long long cells = 1;
  for (int i = 0; i < dim; ++i) cells *= side;

  DfsState st;
  st.dim = dim;
  st.n_max = n_max;
  st.side = side;
  st.visited.assign(static_cast<std::size_t>(cells), 0);
  st.stride.assign(static_cast<std::size_t>(dim), 1);
  for (int i = dim - 2; i >= 0; --i)
    st.stride[static_cast<std::size_t>(i)] =
        st.stride[static_cast<std::size_t>(i + 1)] * side;
  st.counts = &t.counts;
  st.endpoints = nullptr;
  if (with_endpoints) {
    t.has_endpoints = true;
    t.endpoint_counts.assign(
        static_cast<std::size_t>(n_max) + 1,
        std::vector<std::uint64_t>(static_cast<std::size_t>(cells), 0));
    st.endpoints = &t.endpoint_counts;
  }

  std::vector<int> pos(static_cast<std::size_t>(dim), 0);
  long long origin = 0;
  for (int i = 0; i < dim; ++i)
    origin += n_max * st.stride[static_cast<std::size_t>(i)];
  st.visited[static_cast<std::size_t>(origin)] = 1;
  dfs(st, pos, origin, 0);
  return t;
}

std::vector<std::uint64_t> saw_enumerate_hashset(int dim, int n_max,
                                                 double node_budget) {
  if (walk_budget(dim, n_max) > node_budget)
    throw std::length_error("saw_enumerate_hashset: budget exceeded");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(n_max) + 1, 0);
  counts[0] = 1;

  auto key = [&](const std::vector<int>& p) {
    std::uint64_t k = 1469598103934665603ULL;
    for (int c : p) {
      k ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c + (1 << 20)));
      k *= 1099511628211ULL;
    }
    return k;
  };

  std::unordered_set<std::uint64_t> visited;
  std::vector<int> pos(static_cast<std::size_t>(dim), 0);
  visited.insert(key(pos));

  // explicit stack, directions walked in the reverse order of the DFS route
  struct Frame {
    int next_move = 0;
  };
  std::vector<Frame> stack(static_cast<std::size_t>(n_max) + 1);
  std::vector<std::uint64_t> trail(static_cast<std::size_t>(n_max) + 1, 0);
  int depth = 0;
  while (depth >= 0) {
    Frame& f = stack[static_cast<std::size_t>(depth)];
    if (depth == n_max || f.next_move >= 2 * dim) {
      f.next_move = 0;
      --depth;
      if (depth >= 0) {
        // undo the move that got us here
        const int m = stack[static_cast<std::size_t>(depth)].next_move - 1;
        const int axis = dim - 1 - m / 2;
        const int step = (m % 2 == 0) ? 1 : -1;
        visited.erase(trail[static_cast<std::size_t>(depth + 1)]);
        pos[static_cast<std::size_t>(axis)] -= step;
      }
      continue;
    }
    const int m = f.next_move++;
    const int axis = dim - 1 - m / 2;
    const int step = (m % 2 == 0) ? 1 : -1;
    pos[static_cast<std::size_t>(axis)] += step;
    const std::uint64_t k = key(pos);
    if (visited.count(k)) {
      pos[static_cast<std::size_t>(axis)] -= step;
      continue;
    }
    visited.insert(k);
    trail[static_cast<std::size_t>(depth + 1)] = k;
    counts[static_cast<std::size_t>(depth + 1)] += 1;
    ++depth;
  }
  return counts;
}

SeriesValue saw_correlation(const SawTable& table, double gamma,
                            const Site& m) {
  if (!table.has_endpoints)
    throw std::invalid_argument("saw_correlation: table lacks endpoint counts");
  if (static_cast<int>(m.size()) != table.dim)
    throw std::invalid_argument("saw_correlation: dimension mismatch");
  SeriesValue out;
  const int n_max = table.n_max;
  const int d = table.dim;
  const double mu_ub = 2.0 * d - 1.0;
  long long flat = 0;
  const long long side = 2LL * n_max + 1;
  bool inside = true;
  for (int i = 0; i < d; ++i) {
    if (m[static_cast<std::size_t>(i)] < -n_max ||
        m[static_cast<std::size_t>(i)] > n_max)
      inside = false;
  }
  if (inside) {
    for (int i = 0; i < d; ++i)
      flat = flat * side + (m[static_cast<std::size_t>(i)] + n_max);
    double p = 1.0;
    for (int n = 0; n <= n_max; ++n) {
      out.value +=
          p * static_cast<double>(
                  table.endpoint_counts[static_cast<std::size_t>(n)]
                                       [static_cast<std::size_t>(flat)]);
      p *= gamma;
    }
  }
  // tail: #S_{N}(0,m) <= C_N <= C_{n_max} (2d-1)^{N-n_max}
  const double q = std::abs(gamma) * mu_ub;
  if (q < 1.0) {
    out.tail_bound = static_cast<double>(table.counts[static_cast<std::size_t>(n_max)]) *
                     std::pow(std::abs(gamma), n_max) * q / (1.0 - q);
    out.tail_certified = true;
  } else {
    out.diverged = true;
  }
  return out;
}

SusceptibilityResult saw_susceptibility(const SawTable& table, double gamma) {
  SusceptibilityResult out;
  double p = 1.0;
  double acc = 0.0;
  for (int n = 0; n <= table.n_max; ++n) {
    acc += p * static_cast<double>(table.counts[static_cast<std::size_t>(n)]);
    out.partial.push_back(acc);
    p *= gamma;
  }
  out.value = acc;
  const double q = std::abs(gamma) * (2.0 * table.dim - 1.0);
  if (q < 1.0) {
    out.tail_bound =
        static_cast<double>(table.counts[static_cast<std::size_t>(table.n_max)]) *
        std::pow(std::abs(gamma), table.n_max) * q / (1.0 - q);
    out.tail_certified = true;
  }
  // divergence against the running connective estimate
  if (table.n_max >= 2) {
    const double mu_hat =
        static_cast<double>(table.counts[static_cast<std::size_t>(table.n_max)]) /
        static_cast<double>(table.counts[static_cast<std::size_t>(table.n_max - 1)]);
    if (std::abs(gamma) * mu_hat >= 1.0) out.diverged = true;
  }
  return out;
}

ConnectiveEstimate connective_estimate(const SawTable& table) {
  ConnectiveEstimate est;
  for (int n = 1; n <= table.n_max; ++n) {
    est.roots.push_back(std::pow(
        static_cast<double>(table.counts[static_cast<std::size_t>(n)]),
        1.0 / n));
    if (n < table.n_max)
      est.ratios.push_back(
          static_cast<double>(table.counts[static_cast<std::size_t>(n + 1)]) /
          static_cast<double>(table.counts[static_cast<std::size_t>(n)]));
  }
  est.mu_hat = est.ratios.empty() ? 1.0 : est.ratios.back();
  return est;
}

}  // namespace hflab
