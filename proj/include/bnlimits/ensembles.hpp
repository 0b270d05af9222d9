#ifndef BNLIMITS_ENSEMBLES_HPP
#define BNLIMITS_ENSEMBLES_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "bnlimits/dag.hpp"

namespace bnl {

using BigCount = boost::multiprecision::cpp_int;

enum class EnsembleKind {
  restricted_all,     // singleton-class DAGs on m nodes
  restricted_sparse,  // singleton-class DAGs with in-degree <= k
  layered_all,        // known layer ordering, parents in the layer above
  layered_sparse,     // layered with in-degree <= k
};

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::restricted_all;
  int m = 0;
  std::optional<int> k;
  std::vector<int> layers;  // m_1..m_l, only for layered kinds

  bool layered() const {
    return kind == EnsembleKind::layered_all ||
           kind == EnsembleKind::layered_sparse;
  }
  bool sparse() const {
    return kind == EnsembleKind::restricted_sparse ||
           kind == EnsembleKind::layered_sparse;
  }

  bool operator==(const EnsembleSpec&) const = default;
};

void validate(const EnsembleSpec& spec);

// Layer index (0-based into spec.layers) of each node; layer 0 holds nodes
// 0..m_1-1, layer 1 the next m_2, and so on.
std::vector<int> node_layers(const EnsembleSpec& spec);

bool in_ensemble(const EnsembleSpec& spec, const Dag& g);

BigCount binomial(int n, int r);

// c_m via the terminal-vertex inclusion-exclusion recurrence, c_0 = 1.
BigCount count_essential_recurrence(int m);

// Oracle: singleton-class count over the full enumeration.
BigCount count_essential_brute(int m, std::optional<int> k = std::nullopt);

// Closed-form sandwich bounds on the restricted ensemble sizes.
std::pair<BigCount, BigCount> count_bounds_restricted(int m);
std::pair<BigCount, BigCount> count_bounds_sparse(int m, int k);

// Exact layered ensemble size (product form).
BigCount count_layered(const EnsembleSpec& spec);

// Closed-form lower bound on log ensemble size, in nats.
double log_size_lower_bound(const EnsembleSpec& spec);

// Exact size where computable (brute for restricted, product for layered).
BigCount ensemble_size(const EnsembleSpec& spec);

// Cached full member list in canonical order. Restricted kinds are subject
// to the enumeration cap; layered kinds to a total-count cap of 10^6.
std::shared_ptr<const std::vector<Dag>> ensemble_members(
    const EnsembleSpec& spec);

// Uniform draw, deterministic in seed. Layered kinds need no enumeration.
Dag sample_uniform(const EnsembleSpec& spec, std::uint64_t seed);

}  // namespace bnl

#endif
