#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>

#include "bnlimits/dag.hpp"
#include "bnlimits/errors.hpp"

using namespace bnl;

namespace {

Dag make(int m, std::initializer_list<std::pair<int, int>> edges) {
  Dag g = Dag::empty(m);
  for (auto [from, to] : edges) g.parents[std::size_t(to)] |= 1ULL << from;
  return g;
}

// Independent d-separation oracle: ancestral subgraph of {a, b} + Z,
// moralize, delete Z, test connectivity.
bool d_separated(const Dag& g, int a, int b, std::uint64_t z) {
  std::uint64_t keep = (1ULL << a) | (1ULL << b) | z;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < g.m; ++i) {
      if (!((keep >> i) & 1)) continue;
      const std::uint64_t missing = g.parents[std::size_t(i)] & ~keep;
      if (missing) {
        keep |= missing;
        changed = true;
      }
    }
  }
  std::vector<std::uint64_t> adj(std::size_t(g.m), 0);
  for (int i = 0; i < g.m; ++i) {
    if (!((keep >> i) & 1)) continue;
    const auto ps = g.parent_list(i);
    for (std::size_t x = 0; x < ps.size(); ++x) {
      adj[std::size_t(i)] |= 1ULL << ps[x];
      adj[std::size_t(ps[x])] |= 1ULL << i;
      for (std::size_t y = x + 1; y < ps.size(); ++y) {
        adj[std::size_t(ps[x])] |= 1ULL << ps[y];
        adj[std::size_t(ps[y])] |= 1ULL << ps[x];
      }
    }
  }
  const std::uint64_t open = keep & ~z;
  std::uint64_t seen = 1ULL << a;
  std::uint64_t frontier = seen;
  while (frontier) {
    std::uint64_t next = 0;
    for (int i = 0; i < g.m; ++i) {
      if ((frontier >> i) & 1) next |= adj[std::size_t(i)];
    }
    next &= open & ~seen;
    seen |= next;
    frontier = next;
  }
  return !((seen >> b) & 1);
}

// Bit signature of every conditional-independence statement of the DAG.
std::vector<bool> ci_signature(const Dag& g) {
  std::vector<bool> sig;
  for (int a = 0; a < g.m; ++a) {
    for (int b = a + 1; b < g.m; ++b) {
      const std::uint64_t rest =
          ((1ULL << g.m) - 1) & ~(1ULL << a) & ~(1ULL << b);
      // Enumerate subsets of the remaining nodes.
      std::uint64_t z = 0;
      while (true) {
        sig.push_back(d_separated(g, a, b, z));
        if (z == rest) break;
        z = (z - rest) & rest;
      }
    }
  }
  return sig;
}

}  // namespace

TEST_CASE("validation rejects self loops and cycles") {
  Dag self = Dag::empty(2);
  self.parents[0] = 1;  // 0 -> 0
  CHECK_THROWS_AS(validate(self), UsageError);
  const Dag cyc = make(2, {{0, 1}, {1, 0}});
  CHECK_FALSE(is_acyclic(cyc));
  CHECK_THROWS_AS(validate(cyc), UsageError);
  CHECK(is_acyclic(make(3, {{0, 1}, {1, 2}})));
}

TEST_CASE("topological order removes the lowest-indexed free node first") {
  const Dag g = make(3, {{2, 0}});
  const auto order = topological_order(g);
  CHECK(order == std::vector<int>{1, 2, 0});
  CHECK_THROWS_AS(topological_order(make(2, {{0, 1}, {1, 0}})), UsageError);
}

TEST_CASE("skeleton and v-structures") {
  const Dag collider = make(3, {{0, 2}, {1, 2}});
  const auto vs = v_structures(collider);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].collider == 2);
  CHECK(vs[0].spouse_a == 0);
  CHECK(vs[0].spouse_b == 1);

  const Dag chain = make(3, {{0, 1}, {1, 2}});
  CHECK(v_structures(chain).empty());

  const Skeleton s = skeleton(chain);
  CHECK(s.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(s.adjacent(0, 1));
  CHECK_FALSE(s.adjacent(0, 2));
}

TEST_CASE("markov equivalence on the three-node chains and collider") {
  const Dag chain = make(3, {{0, 1}, {1, 2}});
  const Dag rev = make(3, {{2, 1}, {1, 0}});
  const Dag fork = make(3, {{1, 0}, {1, 2}});
  const Dag collider = make(3, {{0, 2}, {1, 2}});
  CHECK(markov_equivalent(chain, rev));
  CHECK(markov_equivalent(chain, fork));
  CHECK_FALSE(markov_equivalent(chain, collider));
  CHECK(markov_equivalent(collider, collider));
  CHECK_THROWS_AS(markov_equivalent(chain, Dag::empty(2)), UsageError);
}

TEST_CASE("equivalence class sizes") {
  CHECK(equivalence_class_size(Dag::empty(3)) == 1);
  CHECK(equivalence_class_size(make(3, {{0, 2}, {1, 2}})) == 1);  // collider
  CHECK(equivalence_class_size(make(3, {{0, 1}, {1, 2}})) == 3);
  // Complete graph on 3 nodes: all 6 acyclic orientations, no v-structures.
  CHECK(equivalence_class_size(make(3, {{0, 1}, {0, 2}, {1, 2}})) == 6);
  CHECK(is_singleton_class(make(3, {{0, 2}, {1, 2}})));
  CHECK_FALSE(is_singleton_class(make(3, {{0, 1}, {1, 2}})));
}

TEST_CASE("labeled DAG enumeration counts and ordering") {
  CHECK(enumerate_dags(1).size() == 1);
  CHECK(enumerate_dags(2).size() == 3);
  CHECK(enumerate_dags(3).size() == 25);
  CHECK(enumerate_dags(4).size() == 543);

  const auto all3 = enumerate_dags(3);
  std::set<std::vector<std::uint64_t>> distinct;
  for (const auto& g : all3) {
    CHECK(is_acyclic(g));
    distinct.insert(g.parents);
  }
  CHECK(distinct.size() == all3.size());
  CHECK(std::is_sorted(all3.begin(), all3.end(),
                       [](const Dag& a, const Dag& b) {
                         return a.parents < b.parents;
                       }));

  // In-degree cap agrees with filtering the full enumeration.
  const auto capped = enumerate_dags(4, 1);
  std::size_t expected = 0;
  for (const auto& g : enumerate_dags(4)) {
    bool ok = true;
    for (int i = 0; i < 4; ++i) ok = ok && g.in_degree(i) <= 1;
    if (ok) ++expected;
  }
  CHECK(capped.size() == expected);
  for (const auto& g : capped) {
    for (int i = 0; i < 4; ++i) CHECK(g.in_degree(i) <= 1);
  }
}

TEST_CASE("enumeration capability limits") {
  CHECK(max_enum_nodes() >= 6);
  CHECK_THROWS_AS(enumerate_dags(max_enum_nodes() + 1),
                  CapabilityError);
  CHECK_THROWS_AS(enumerate_dags(max_enum_nodes() + 1, 3), CapabilityError);
  CHECK_THROWS_AS(enumerate_dags(max_enum_nodes() + 2, 2), CapabilityError);
}

TEST_CASE("structural equivalence test matches the d-separation oracle") {
  for (int m = 2; m <= 4; ++m) {
    const auto dags = enumerate_dags(m);
    std::vector<std::vector<bool>> sigs;
    sigs.reserve(dags.size());
    for (const auto& g : dags) sigs.push_back(ci_signature(g));

    std::map<std::vector<bool>, std::size_t> class_size;
    for (const auto& s : sigs) ++class_size[s];
    std::size_t total = 0;
    for (const auto& [s, c] : class_size) total += c;
    CHECK(total == dags.size());

    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < dags.size(); ++i) {
      if (equivalence_class_size(dags[i]) != class_size[sigs[i]]) {
        ++mismatches;
      }
      for (std::size_t j = i + 1; j < dags.size(); ++j) {
        if (markov_equivalent(dags[i], dags[j]) != (sigs[i] == sigs[j])) {
          ++mismatches;
        }
      }
    }
    CHECK(mismatches == 0);
  }
}
