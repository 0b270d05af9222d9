#include "bnlimits/ensembles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "bnlimits/errors.hpp"
#include "bnlimits/rng.hpp"

namespace bnl {

void validate(const EnsembleSpec& spec) {
  if (spec.m < 1) throw UsageError("EnsembleSpec: m must be >= 1");
  if (spec.sparse()) {
    if (!spec.k.has_value()) {
      throw UsageError("EnsembleSpec: sparse kinds require k");
    }
    if (*spec.k < 1 || *spec.k >= spec.m) {
      throw UsageError("EnsembleSpec: k must satisfy 1 <= k < m");
    }
  }
  if (spec.layered()) {
    if (spec.layers.empty()) {
      throw UsageError("EnsembleSpec: layered kinds require layer sizes");
    }
    int total = 0;
    for (int s : spec.layers) {
      if (s < 1) throw UsageError("EnsembleSpec: layer sizes must be >= 1");
      total += s;
    }
    if (total != spec.m) {
      throw UsageError("EnsembleSpec: layer sizes must sum to m");
    }
  }
}

std::vector<int> node_layers(const EnsembleSpec& spec) {
  std::vector<int> out(static_cast<std::size_t>(spec.m), 0);
  int node = 0;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    for (int j = 0; j < spec.layers[li]; ++j) {
      out[static_cast<std::size_t>(node++)] = static_cast<int>(li);
    }
  }
  return out;
}

bool in_ensemble(const EnsembleSpec& spec, const Dag& g) {
  if (g.m != spec.m) return false;
  if (spec.sparse()) {
    for (int i = 0; i < g.m; ++i) {
      if (g.in_degree(i) > *spec.k) return false;
    }
  }
  if (spec.layered()) {
    const auto layer = node_layers(spec);
    for (int i = 0; i < g.m; ++i) {
      for (int p : g.parent_list(i)) {
        if (layer[static_cast<std::size_t>(p)] !=
            layer[static_cast<std::size_t>(i)] + 1) {
          return false;
        }
      }
    }
    return true;
  }
  return is_singleton_class(g);
}

BigCount binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  r = std::min(r, n - r);
  BigCount num = 1;
  for (int i = 0; i < r; ++i) {
    num *= n - i;
    num /= i + 1;  // exact at each step: product of i+1 consecutive ints
  }
  return num;
}

BigCount count_essential_recurrence(int m) {
  if (m < 0) throw UsageError("count_essential_recurrence: m < 0");
  std::vector<BigCount> c(static_cast<std::size_t>(m) + 1);
  c[0] = 1;
  for (int n = 1; n <= m; ++n) {
    BigCount total = 0;
    for (int s = 1; s <= n; ++s) {
      BigCount term = binomial(n, s);
      BigCount base = (BigCount(1) << (n - s)) - (n - s);
      for (int e = 0; e < s; ++e) term *= base;
      term *= c[static_cast<std::size_t>(n - s)];
      if (s % 2 == 1) {
        total += term;
      } else {
        total -= term;
      }
    }
    c[static_cast<std::size_t>(n)] = total;
  }
  return c[static_cast<std::size_t>(m)];
}

BigCount count_essential_brute(int m, std::optional<int> k) {
  if (m == 0) return 1;  // the empty graph on zero nodes
  BigCount count = 0;
  enumerate_dags(m, k, [&](const Dag& g) {
    if (is_singleton_class(g)) ++count;
  });
  return count;
}

std::pair<BigCount, BigCount> count_bounds_restricted(int m) {
  if (m < 1) throw UsageError("count_bounds_restricted: m must be >= 1");
  const int lower_exp = m * (m - 3) / 2 + 1;
  BigCount lower = lower_exp >= 0 ? (BigCount(1) << lower_exp) : BigCount(1);
  BigCount upper = 1;
  for (int i = 2; i <= m; ++i) upper *= i;
  upper <<= m * (m - 1) / 2;
  return {lower, upper};
}

std::pair<BigCount, BigCount> count_bounds_sparse(int m, int k) {
  if (k <= 1 || m <= 2) {
    throw DomainError("count_bounds_sparse: requires k > 1 and m > 2");
  }
  if (k >= m) throw UsageError("count_bounds_sparse: k must be < m");
  auto cap_sum = [&](int n) {
    BigCount s = 0;
    for (int i = 0; i <= k; ++i) s += binomial(n, i);
    return s;
  };
  BigCount lower = BigCount(1) << (k * (k - 3) / 2 + 1);
  BigCount upper = 1;
  for (int i = 2; i <= m; ++i) upper *= i;
  upper <<= k * (k - 1) / 2;
  for (int j = k + 1; j <= m - 1; ++j) {
    lower *= cap_sum(j - 1);
    upper *= cap_sum(j);
  }
  return {lower, upper};
}

BigCount count_layered(const EnsembleSpec& spec) {
  validate(spec);
  if (!spec.layered()) {
    throw UsageError("count_layered: spec is not a layered kind");
  }
  BigCount total = 1;
  const int l = static_cast<int>(spec.layers.size());
  for (int i = 0; i + 1 < l; ++i) {
    const int below = spec.layers[static_cast<std::size_t>(i)];
    const int above = spec.layers[static_cast<std::size_t>(i) + 1];
    BigCount per_node;
    if (spec.kind == EnsembleKind::layered_all) {
      per_node = BigCount(1) << above;
    } else {
      per_node = 0;
      for (int j = 0; j <= *spec.k; ++j) per_node += binomial(above, j);
    }
    for (int n = 0; n < below; ++n) total *= per_node;
  }
  return total;
}

double log_size_lower_bound(const EnsembleSpec& spec) {
  validate(spec);
  const double ln2 = std::log(2.0);
  switch (spec.kind) {
    case EnsembleKind::restricted_all:
      return (spec.m * (spec.m - 3) / 2.0 + 1.0) * ln2;
    case EnsembleKind::restricted_sparse: {
      const int m = spec.m;
      const int k = *spec.k;
      if (k <= 1 || m <= 2) {
        throw DomainError("log_size_lower_bound: sparse form needs k>1, m>2");
      }
      const double log_fact_m2 = std::lgamma(m - 1.0);  // ln (m-2)!
      const double log_fact_k = std::lgamma(k + 1.0);
      return k * (log_fact_m2 - (m - k - 2.0) * std::log(double(k)) -
                  log_fact_k) +
             (k * (k - 3) / 2.0 + 1.0) * ln2;
    }
    case EnsembleKind::layered_all: {
      double s = 0;
      for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
        s += double(spec.layers[i + 1]) * double(spec.layers[i]);
      }
      return ln2 * s;  // exact log size
    }
    case EnsembleKind::layered_sparse: {
      const double k = double(*spec.k);
      double s = 0;
      for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
        s += double(spec.layers[i]) * std::log(double(spec.layers[i + 1]) / k);
      }
      return k * s;
    }
  }
  throw UsageError("log_size_lower_bound: unknown kind");
}

BigCount ensemble_size(const EnsembleSpec& spec) {
  validate(spec);
  if (spec.layered()) return count_layered(spec);
  return count_essential_brute(spec.m, spec.k);
}

namespace {

constexpr std::uint64_t kLayeredEnumCap = 1000000;

std::vector<Dag> build_members(const EnsembleSpec& spec) {
  std::vector<Dag> out;
  if (!spec.layered()) {
    enumerate_dags(spec.m, spec.k, [&](const Dag& g) {
      if (is_singleton_class(g)) out.push_back(g);
    });
    return out;
  }
  const BigCount total = count_layered(spec);
  if (total > kLayeredEnumCap) {
    throw CapabilityError("ensemble_members: layered ensemble has " +
                          total.str() + " members, cap is " +
                          std::to_string(kLayeredEnumCap));
  }
  // Odometer over each node's allowed parent sets, lexicographic.
  const auto layer = node_layers(spec);
  const int l = static_cast<int>(spec.layers.size());
  std::vector<std::vector<std::uint64_t>> choices(
      static_cast<std::size_t>(spec.m));
  std::vector<int> layer_start(static_cast<std::size_t>(l), 0);
  for (int li = 1; li < l; ++li) {
    layer_start[static_cast<std::size_t>(li)] =
        layer_start[static_cast<std::size_t>(li) - 1] +
        spec.layers[static_cast<std::size_t>(li) - 1];
  }
  for (int i = 0; i < spec.m; ++i) {
    const int li = layer[static_cast<std::size_t>(i)];
    auto& opts = choices[static_cast<std::size_t>(i)];
    if (li + 1 >= l) {
      opts.push_back(0);
      continue;
    }
    const int above_start = layer_start[static_cast<std::size_t>(li) + 1];
    const int above_size = spec.layers[static_cast<std::size_t>(li) + 1];
    const int cap = spec.sparse() ? *spec.k : above_size;
    for (std::uint64_t sub = 0; sub < (1ULL << above_size); ++sub) {
      if (std::popcount(sub) <= cap) {
        opts.push_back(sub << above_start);
      }
    }
    std::sort(opts.begin(), opts.end());
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(spec.m), 0);
  while (true) {
    Dag g = Dag::empty(spec.m);
    for (int i = 0; i < spec.m; ++i) {
      g.parents[static_cast<std::size_t>(i)] =
          choices[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    }
    out.push_back(std::move(g));
    int pos = spec.m - 1;
    while (pos >= 0) {
      auto& cur = idx[static_cast<std::size_t>(pos)];
      if (++cur < choices[static_cast<std::size_t>(pos)].size()) break;
      cur = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

struct SpecKey {
  int kind;
  int m;
  int k;
  std::vector<int> layers;
  auto operator<=>(const SpecKey&) const = default;
};

SpecKey make_key(const EnsembleSpec& spec) {
  return {static_cast<int>(spec.kind), spec.m, spec.k.value_or(-1),
          spec.layers};
}

}  // namespace

std::shared_ptr<const std::vector<Dag>> ensemble_members(
    const EnsembleSpec& spec) {
  validate(spec);
  static std::mutex mu;
  static std::map<SpecKey, std::shared_ptr<const std::vector<Dag>>> cache;
  const SpecKey key = make_key(spec);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto members = std::make_shared<const std::vector<Dag>>(build_members(spec));
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.emplace(key, std::move(members));
  return it->second;
}

namespace {

// Uniform subset of size `size` out of `n` candidates, as a bitmask.
std::uint64_t random_subset_of_size(int n, int size, std::mt19937_64& rng) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  std::uint64_t mask = 0;
  for (int j = 0; j < size; ++j) {
    const auto pick =
        j + static_cast<int>(rng() % static_cast<std::uint64_t>(n - j));
    std::swap(pool[static_cast<std::size_t>(j)],
              pool[static_cast<std::size_t>(pick)]);
    mask |= 1ULL << pool[static_cast<std::size_t>(j)];
  }
  return mask;
}

}  // namespace

Dag sample_uniform(const EnsembleSpec& spec, std::uint64_t seed) {
  validate(spec);
  auto rng = make_rng(derive_seed(seed, 0x5a3cu));
  if (!spec.layered()) {
    auto members = ensemble_members(spec);
    if (members->empty()) {
      throw UsageError("sample_uniform: empty ensemble");
    }
    // Unbiased index draw by rejection.
    const std::uint64_t n = members->size();
    const std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t x;
    do {
      x = rng();
    } while (x >= limit);
    return (*members)[static_cast<std::size_t>(x % n)];
  }
  const auto layer = node_layers(spec);
  const int l = static_cast<int>(spec.layers.size());
  std::vector<int> layer_start(static_cast<std::size_t>(l) + 1, 0);
  for (int li = 0; li < l; ++li) {
    layer_start[static_cast<std::size_t>(li) + 1] =
        layer_start[static_cast<std::size_t>(li)] +
        spec.layers[static_cast<std::size_t>(li)];
  }
  Dag g = Dag::empty(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    const int li = layer[static_cast<std::size_t>(i)];
    if (li + 1 >= l) continue;
    const int above_start = layer_start[static_cast<std::size_t>(li) + 1];
    const int above_size = spec.layers[static_cast<std::size_t>(li) + 1];
    std::uint64_t mask = 0;
    if (spec.kind == EnsembleKind::layered_all) {
      for (int b = 0; b < above_size; ++b) {
        if (rng() & 1u) mask |= 1ULL << b;
      }
    } else {
      const int cap = std::min(*spec.k, above_size);
      std::vector<double> weights(static_cast<std::size_t>(cap) + 1);
      double total = 0;
      for (int j = 0; j <= cap; ++j) {
        weights[static_cast<std::size_t>(j)] =
            binomial(above_size, j).convert_to<double>();
        total += weights[static_cast<std::size_t>(j)];
      }
      double u = uniform01(rng) * total;
      int size = cap;
      for (int j = 0; j <= cap; ++j) {
        u -= weights[static_cast<std::size_t>(j)];
        if (u < 0) {
          size = j;
          break;
        }
      }
      mask = random_subset_of_size(above_size, size, rng);
    }
    g.parents[static_cast<std::size_t>(i)] = mask << above_start;
  }
  return g;
}

}  // namespace bnl
