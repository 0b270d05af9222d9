#include "bnlimits/dag.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <string>

#include "bnlimits/errors.hpp"

namespace bnl {

Dag::Dag(int m_, std::vector<std::uint64_t> parents_)
    : m(m_), parents(std::move(parents_)) {
  validate(*this);
}

Dag Dag::empty(int m) {
  Dag g;
  g.m = m;
  g.parents.assign(static_cast<std::size_t>(m), 0);
  return g;
}

int Dag::in_degree(int i) const {
  return std::popcount(parents[static_cast<std::size_t>(i)]);
}

int Dag::edge_count() const {
  int total = 0;
  for (auto mask : parents) total += std::popcount(mask);
  return total;
}

std::vector<int> Dag::parent_list(int i) const {
  std::vector<int> out;
  std::uint64_t mask = parents[static_cast<std::size_t>(i)];
  while (mask) {
    int j = std::countr_zero(mask);
    out.push_back(j);
    mask &= mask - 1;
  }
  return out;
}

bool Skeleton::adjacent(int a, int b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b));
}

void validate(const Dag& g) {
  if (g.m < 1 || g.m > 64) {
    throw UsageError("Dag: node count must be in [1, 64], got " +
                     std::to_string(g.m));
  }
  if (static_cast<int>(g.parents.size()) != g.m) {
    throw UsageError("Dag: parents size does not match node count");
  }
  const std::uint64_t all =
      (g.m == 64) ? ~0ULL : ((1ULL << g.m) - 1);
  for (int i = 0; i < g.m; ++i) {
    const std::uint64_t mask = g.parents[static_cast<std::size_t>(i)];
    if (mask & ~all) throw UsageError("Dag: parent index out of range");
    if ((mask >> i) & 1u) throw UsageError("Dag: self-loop at node " +
                                           std::to_string(i));
  }
  if (!is_acyclic(g)) throw UsageError("Dag: cycle detected");
}

bool is_acyclic(const Dag& g) {
  // Kahn peeling on bitmasks.
  std::vector<std::uint64_t> rem = g.parents;
  std::uint64_t alive = (g.m == 64) ? ~0ULL : ((1ULL << g.m) - 1);
  bool progress = true;
  while (alive && progress) {
    progress = false;
    std::uint64_t scan = alive;
    while (scan) {
      int i = std::countr_zero(scan);
      scan &= scan - 1;
      if ((rem[static_cast<std::size_t>(i)] & alive) == 0) {
        alive &= ~(1ULL << i);
        progress = true;
      }
    }
  }
  return alive == 0;
}

std::vector<int> topological_order(const Dag& g) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(g.m));
  std::uint64_t alive = (g.m == 64) ? ~0ULL : ((1ULL << g.m) - 1);
  while (alive) {
    int next = -1;
    std::uint64_t scan = alive;
    while (scan) {
      int i = std::countr_zero(scan);
      scan &= scan - 1;
      if ((g.parents[static_cast<std::size_t>(i)] & alive) == 0) {
        next = i;
        break;
      }
    }
    if (next < 0) throw UsageError("topological_order: cycle detected");
    order.push_back(next);
    alive &= ~(1ULL << next);
  }
  return order;
}

Skeleton skeleton(const Dag& g) {
  Skeleton s;
  s.m = g.m;
  for (int i = 0; i < g.m; ++i) {
    for (int j : g.parent_list(i)) {
      s.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(s.edges.begin(), s.edges.end());
  s.edges.erase(std::unique(s.edges.begin(), s.edges.end()), s.edges.end());
  return s;
}

std::vector<VStructure> v_structures(const Dag& g) {
  std::vector<VStructure> out;
  const Skeleton s = skeleton(g);
  for (int c = 0; c < g.m; ++c) {
    const std::vector<int> ps = g.parent_list(c);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        if (!s.adjacent(ps[a], ps[b])) {
          out.push_back({c, ps[a], ps[b]});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool markov_equivalent(const Dag& g1, const Dag& g2) {
  if (g1.m != g2.m) {
    throw UsageError("markov_equivalent: node counts differ");
  }
  return skeleton(g1) == skeleton(g2) && v_structures(g1) == v_structures(g2);
}

std::uint64_t equivalence_class_size(const Dag& g) {
  if (g.m > max_enum_nodes()) {
    throw CapabilityError("equivalence_class_size: m=" + std::to_string(g.m) +
                          " exceeds the brute-force limit " +
                          std::to_string(max_enum_nodes()));
  }
  const Skeleton s = skeleton(g);
  const auto vs = v_structures(g);
  const std::size_t e = s.edges.size();
  std::uint64_t count = 0;
  for (std::uint64_t orient = 0; orient < (1ULL << e); ++orient) {
    Dag h = Dag::empty(g.m);
    for (std::size_t idx = 0; idx < e; ++idx) {
      auto [a, b] = s.edges[idx];
      if ((orient >> idx) & 1u) {
        h.parents[static_cast<std::size_t>(b)] |= 1ULL << a;  // a -> b
      } else {
        h.parents[static_cast<std::size_t>(a)] |= 1ULL << b;  // b -> a
      }
    }
    if (is_acyclic(h) && v_structures(h) == vs) ++count;
  }
  return count;
}

bool is_singleton_class(const Dag& g) {
  return equivalence_class_size(g) == 1;
}

int max_enum_nodes() {
  if (const char* env = std::getenv("BNLIMITS_MAX_ENUM")) {
    const int v = std::atoi(env);
    if (v >= 1 && v <= 16) return v;
  }
  return 6;
}

namespace {

// Cycle introduced by assigning `mask` as parents of `node` iff some parent
// is already a descendant of `node` in the partial graph.
bool creates_cycle(const std::vector<std::uint64_t>& parents, int m, int node,
                   std::uint64_t mask) {
  std::uint64_t reached = 1ULL << node;
  std::uint64_t frontier = reached;
  while (frontier) {
    std::uint64_t next = 0;
    for (int i = 0; i < m; ++i) {
      if ((reached >> i) & 1u) continue;
      if (parents[static_cast<std::size_t>(i)] & frontier) next |= 1ULL << i;
    }
    reached |= next;
    frontier = next;
  }
  return (mask & reached) != 0;
}

void enumerate_rec(int m, int max_indeg, int node,
                   std::vector<std::uint64_t>& parents,
                   const std::function<void(const Dag&)>& yield) {
  if (node == m) {
    Dag g;
    g.m = m;
    g.parents = parents;
    yield(g);
    return;
  }
  const std::uint64_t all = (1ULL << m) - 1;
  const std::uint64_t candidates = all & ~(1ULL << node);
  // Ascending masks over subsets of `candidates` give lexicographic order.
  std::uint64_t sub = 0;
  while (true) {
    if (std::popcount(sub) <= max_indeg &&
        !creates_cycle(parents, m, node, sub)) {
      parents[static_cast<std::size_t>(node)] = sub;
      enumerate_rec(m, max_indeg, node + 1, parents, yield);
      parents[static_cast<std::size_t>(node)] = 0;
    }
    if (sub == candidates) break;
    sub = (sub - candidates) & candidates;  // next subset in ascending order
  }
}

}  // namespace

void enumerate_dags(int m, std::optional<int> k,
                    const std::function<void(const Dag&)>& yield) {
  if (m < 1) throw UsageError("enumerate_dags: m must be positive");
  const int cap = max_enum_nodes();
  const bool sparse_ok = k.has_value() && *k <= 2 && m <= cap + 1;
  if (m > cap && !sparse_ok) {
    throw CapabilityError(
        "enumerate_dags: m=" + std::to_string(m) +
        " exceeds the enumeration limit (" + std::to_string(cap) +
        " in general, " + std::to_string(cap + 1) + " with k <= 2)");
  }
  if (k.has_value() && *k < 0) throw UsageError("enumerate_dags: k < 0");
  const int max_indeg = k.has_value() ? *k : m - 1;
  std::vector<std::uint64_t> parents(static_cast<std::size_t>(m), 0);
  enumerate_rec(m, max_indeg, 0, parents, yield);
}

std::vector<Dag> enumerate_dags(int m, std::optional<int> k) {
  std::vector<Dag> out;
  enumerate_dags(m, k, [&](const Dag& g) { out.push_back(g); });
  return out;
}

}  // namespace bnl
