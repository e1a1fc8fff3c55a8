#include "mhcl/analysis.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <stdexcept>

namespace mhcl::analysis {
namespace {

// Twice the four-point delta of one quadruple.
inline int twice_delta(const DistanceMatrix& dist, std::size_t w, std::size_t x, std::size_t y, std::size_t z) {
  std::array<int, 3> s{dist(w, x) + dist(y, z), dist(w, y) + dist(x, z), dist(w, z) + dist(x, y)};
  std::sort(s.begin(), s.end());
  return s[2] - s[1];
}

long long choose4(long long n) { return n < 4 ? 0 : n * (n - 1) / 2 * (n - 2) / 3 * (n - 3) / 4; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(static_cast<double>(rng() >> 11) * 0x1.0p-53 * static_cast<double>(n));
}

}  // namespace

DistanceMatrix bfs_apsp(const HeteroGraph& g) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  if (n >= kUnreachable) throw std::invalid_argument("graph too large for 16-bit distances");
  DistanceMatrix out{n, std::vector<Distance>(n * n, kUnreachable)};
  std::vector<NodeId> queue(n);
  for (std::size_t s = 0; s < n; ++s) {
    Distance* row = out.d.data() + s * n;
    row[s] = 0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = static_cast<NodeId>(s);
    while (head < tail) {
      const NodeId u = queue[head++];
      for (NodeId v : g.neighbors(u)) {
        if (row[v] == kUnreachable) {
          row[v] = static_cast<Distance>(row[u] + 1);
          queue[tail++] = v;
        }
      }
    }
  }
  return out;
}

Delta delta_of(const DistanceMatrix& dist, const std::vector<std::size_t>& members, const DeltaMode& mode) {
  if (mode.kind == DeltaMode::Kind::sampled && mode.quadruples <= 0) {
    throw std::invalid_argument("sampled delta needs a positive quadruple count");
  }
  const auto n = members.size();
  const long long total = choose4(static_cast<long long>(n));
  if (total == 0) return {};

  long long sum = 0;
  int best = 0;
  long long count = 0;
  if (mode.kind == DeltaMode::Kind::exact || total <= mode.quadruples) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        for (std::size_t c = b + 1; c < n; ++c) {
          for (std::size_t d = c + 1; d < n; ++d) {
            const int t = twice_delta(dist, members[a], members[b], members[c], members[d]);
            sum += t;
            best = std::max(best, t);
          }
        }
      }
    }
    count = total;
  } else {
    std::mt19937_64 rng(mode.seed);
    for (long long i = 0; i < mode.quadruples; ++i) {
      std::array<std::size_t, 4> q{};
      for (std::size_t k = 0; k < 4; ++k) {
        bool fresh = false;
        while (!fresh) {
          q[k] = pick(rng, n);
          fresh = std::find(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(k), q[k]) ==
                  q.begin() + static_cast<std::ptrdiff_t>(k);
        }
      }
      const int t = twice_delta(dist, members[q[0]], members[q[1]], members[q[2]], members[q[3]]);
      sum += t;
      best = std::max(best, t);
    }
    count = mode.quadruples;
  }
  return {best / 2.0, static_cast<double>(sum) / (2.0 * static_cast<double>(count)), count};
}

std::vector<std::vector<NodeId>> connected_components(const HeteroGraph& g) {
  std::vector<int> seen(static_cast<std::size_t>(g.num_nodes()), 0);
  std::vector<std::vector<NodeId>> out;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    std::vector<NodeId> comp{s};
    seen[static_cast<std::size_t>(s)] = 1;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      for (NodeId v : g.neighbors(comp[i])) {
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          comp.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

Delta gromov_delta(const HeteroGraph& g, const DeltaMode& mode) {
  if (mode.kind == DeltaMode::Kind::sampled && mode.quadruples <= 0) {
    throw std::invalid_argument("sampled delta needs a positive quadruple count");
  }
  const auto dist = bfs_apsp(g);
  Delta out;
  double weighted = 0.0;
  double weight = 0.0;
  std::uint64_t component_seed = mode.seed;
  for (const auto& comp : connected_components(g)) {
    if (comp.size() < 4) continue;
    DeltaMode local = mode;
    local.seed = component_seed++;
    const auto d = delta_of(dist, std::vector<std::size_t>(comp.begin(), comp.end()), local);
    out.max = std::max(out.max, d.max);
    out.quadruples += d.quadruples;
    weighted += static_cast<double>(comp.size()) * d.avg;
    weight += static_cast<double>(comp.size());
  }
  out.avg = weight > 0.0 ? weighted / weight : 0.0;
  return out;
}

MetapathDelta metapath_delta(const HeteroGraph& g, const Metapath& metapath, const DeltaMode& mode) {
  const auto sub = metapath_subgraph(g, metapath);
  return {static_cast<std::size_t>(sub.num_nodes()), sub.num_edges(), gromov_delta(sub, mode)};
}

}  // namespace mhcl::analysis
