#ifndef BNLIMITS_DAG_HPP
#define BNLIMITS_DAG_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace bnl {

// Labeled DAG on nodes 0..m-1 stored as per-node parent bitmasks.
// parents[i] bit j set means edge j -> i.
struct Dag {
  int m = 0;
  std::vector<std::uint64_t> parents;

  Dag() = default;
  Dag(int m_, std::vector<std::uint64_t> parents_);
  static Dag empty(int m);

  bool has_edge(int from, int to) const {
    return (parents[to] >> from) & 1u;
  }
  int in_degree(int i) const;
  int edge_count() const;
  std::vector<int> parent_list(int i) const;

  bool operator==(const Dag&) const = default;
};

// Undirected edge set of a DAG.
struct Skeleton {
  int m = 0;
  std::vector<std::pair<int, int>> edges;  // first < second, sorted

  bool operator==(const Skeleton&) const = default;
  bool adjacent(int a, int b) const;
};

// Collider a -> c <- b with a, b non-adjacent.
struct VStructure {
  int collider = 0;
  int spouse_a = 0;  // spouse_a < spouse_b
  int spouse_b = 0;

  auto operator<=>(const VStructure&) const = default;
};

// Throws UsageError on self-loops / out-of-range bits, and on cycles.
void validate(const Dag& g);

bool is_acyclic(const Dag& g);

// Canonical order: repeatedly remove the lowest-indexed parent-free node.
// Position of node i in the result is t_G(i) - 1.
std::vector<int> topological_order(const Dag& g);

Skeleton skeleton(const Dag& g);
std::vector<VStructure> v_structures(const Dag& g);

// Structural test: identical skeletons and identical v-structure sets.
bool markov_equivalent(const Dag& g1, const Dag& g2);

// Brute-force |[g]| over all acyclic orientations of g's skeleton.
std::uint64_t equivalence_class_size(const Dag& g);
bool is_singleton_class(const Dag& g);

// Enumeration node cap (default 6); BNLIMITS_MAX_ENUM overrides.
int max_enum_nodes();

// Yields every labeled DAG on m nodes (in-degree <= k if given), each once,
// lexicographic on the flattened parent-mask tuple.
void enumerate_dags(int m, std::optional<int> k,
                    const std::function<void(const Dag&)>& yield);
std::vector<Dag> enumerate_dags(int m, std::optional<int> k = std::nullopt);

}  // namespace bnl

#endif
