#include "bnlimits/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bnlimits/errors.hpp"
#include "bnlimits/rng.hpp"

namespace bnl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Failure probability theta_i = theta^(1 + mean(parent values)).
double noisy_or_failure(double theta, const std::vector<double>& pv) {
  double s = 0;
  for (double x : pv) s += x;
  return std::pow(theta, 1.0 + s / static_cast<double>(pv.size()));
}

int cpt_config_index(int v, const std::vector<double>& pv) {
  int idx = 0;
  int stride = 1;
  for (double x : pv) {
    const int xi = static_cast<int>(x);
    if (xi < 0 || xi >= v) throw UsageError("cpt: parent value out of range");
    idx += xi * stride;
    stride *= v;
  }
  return idx;
}

}  // namespace

FamilyModel FamilyModel::make_cpt(int v, double theta_min) {
  FamilyModel f;
  f.kind = FamilyKind::cpt;
  f.v = v;
  f.theta_min = theta_min;
  validate(f);
  return f;
}

FamilyModel FamilyModel::make_gaussian(double mu_a, double mu_b,
                                       double sigma_min, double sigma_max) {
  FamilyModel f;
  f.kind = FamilyKind::gaussian;
  f.mu_a = mu_a;
  f.mu_b = mu_b;
  f.sigma_min = sigma_min;
  f.sigma_max = sigma_max;
  validate(f);
  return f;
}

FamilyModel FamilyModel::make_noisy_or(double theta) {
  FamilyModel f;
  f.kind = FamilyKind::noisy_or;
  f.theta = theta;
  validate(f);
  return f;
}

FamilyModel FamilyModel::make_logistic(double w_max_1) {
  FamilyModel f;
  f.kind = FamilyKind::logistic;
  f.w_max_1 = w_max_1;
  validate(f);
  return f;
}

void validate(const FamilyModel& fam) {
  switch (fam.kind) {
    case FamilyKind::cpt:
      if (fam.v < 2) throw UsageError("cpt: support size v must be >= 2");
      if (!(fam.theta_min > 0) || fam.theta_min * fam.v > 1.0) {
        throw DomainError("cpt: theta_min must lie in (0, 1/v]");
      }
      return;
    case FamilyKind::gaussian:
      if (fam.mu_a > fam.mu_b) throw UsageError("gaussian: mu_a > mu_b");
      if (!(fam.sigma_min > 0) || fam.sigma_min > fam.sigma_max) {
        throw UsageError("gaussian: need 0 < sigma_min <= sigma_max");
      }
      return;
    case FamilyKind::noisy_or:
      if (!(fam.theta > 0) || !(fam.theta < 1)) {
        throw DomainError("noisy_or: theta must lie in (0, 1)");
      }
      return;
    case FamilyKind::logistic:
      if (!(fam.w_max_1 > 0)) throw UsageError("logistic: w_max_1 must be > 0");
      return;
  }
  throw UsageError("FamilyModel: unknown kind");
}

bool is_discrete(const FamilyModel& fam) {
  return fam.kind != FamilyKind::gaussian;
}

int support_size(const FamilyModel& fam) {
  return fam.kind == FamilyKind::cpt ? fam.v : 2;
}

NaturalParam natural_param(const FamilyModel& fam, const NodeParams& np,
                           const std::vector<double>& parent_values) {
  if (static_cast<int>(parent_values.size()) != np.n_parents) {
    throw UsageError("natural_param: parent value dimension mismatch");
  }
  NaturalParam eta;
  switch (fam.kind) {
    case FamilyKind::cpt: {
      const auto& row = np.table[static_cast<std::size_t>(
          cpt_config_index(fam.v, parent_values))];
      eta.coords.reserve(row.size());
      for (double p : row) {
        if (!(p > 0)) throw DomainError("cpt: zero probability cell");
        eta.coords.push_back(std::log(p));
      }
      return eta;
    }
    case FamilyKind::gaussian: {
      const double mean =
          np.n_parents == 0 ? np.mean : dot(np.weights, parent_values);
      eta.coords.push_back(mean / (np.sigma / std::numbers::sqrt2));
      return eta;
    }
    case FamilyKind::noisy_or: {
      // Coordinates follow the failure-probability parameterization: the
      // root law B(theta) has failure probability 1 - theta.
      const double fail = np.n_parents == 0
                              ? 1.0 - np.theta
                              : noisy_or_failure(np.theta, parent_values);
      eta.coords.push_back(std::log(fail) - std::log1p(-fail));
      return eta;
    }
    case FamilyKind::logistic: {
      eta.coords.push_back(np.n_parents == 0 ? 0.0
                                             : dot(np.weights, parent_values));
      return eta;
    }
  }
  throw UsageError("natural_param: unknown family");
}

std::vector<double> expected_suff_stat(const FamilyModel& fam,
                                       const NaturalParam& eta) {
  switch (fam.kind) {
    case FamilyKind::cpt: {
      const double hi = *std::max_element(eta.coords.begin(), eta.coords.end());
      std::vector<double> out(eta.coords.size());
      double z = 0;
      for (std::size_t j = 0; j < eta.coords.size(); ++j) {
        out[j] = std::exp(eta.coords[j] - hi);
        z += out[j];
      }
      for (double& p : out) p /= z;
      return out;
    }
    case FamilyKind::gaussian:
      return {eta.coords.at(0)};
    case FamilyKind::noisy_or:
    case FamilyKind::logistic:
      return {sigmoid(eta.coords.at(0))};
  }
  throw UsageError("expected_suff_stat: unknown family");
}

double log_partition(const FamilyModel& fam, const NaturalParam& eta) {
  switch (fam.kind) {
    case FamilyKind::cpt: {
      const double hi = *std::max_element(eta.coords.begin(), eta.coords.end());
      double z = 0;
      for (double c : eta.coords) z += std::exp(c - hi);
      return hi + std::log(z);
    }
    case FamilyKind::gaussian: {
      const double e = eta.coords.at(0);
      return e * e / 2.0;
    }
    case FamilyKind::noisy_or:
    case FamilyKind::logistic: {
      const double e = eta.coords.at(0);
      return e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    }
  }
  throw UsageError("log_partition: unknown family");
}

double delta_bound(const FamilyModel& fam, const NaturalParam& eta1,
                   const NaturalParam& eta2) {
  if (eta1.coords.size() != eta2.coords.size()) {
    throw UsageError("delta_bound: dimension mismatch");
  }
  const auto mu1 = expected_suff_stat(fam, eta1);
  const auto mu2 = expected_suff_stat(fam, eta2);
  double d = 0;
  for (std::size_t j = 0; j < eta1.coords.size(); ++j) {
    d += (eta1.coords[j] - eta2.coords[j]) * (mu1[j] - mu2[j]);
  }
  return d;
}

double kl_exact(const FamilyModel& fam, const NaturalParam& eta1,
                const NaturalParam& eta2) {
  if (eta1.coords.size() != eta2.coords.size()) {
    throw UsageError("kl_exact: dimension mismatch");
  }
  switch (fam.kind) {
    case FamilyKind::cpt: {
      const auto p = expected_suff_stat(fam, eta1);
      const auto q = expected_suff_stat(fam, eta2);
      double kl = 0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] > 0) kl += p[j] * (std::log(p[j]) - std::log(q[j]));
      }
      return kl;
    }
    case FamilyKind::gaussian: {
      const double d = eta1.coords.at(0) - eta2.coords.at(0);
      return d * d / 2.0;
    }
    case FamilyKind::noisy_or:
    case FamilyKind::logistic: {
      const double p = sigmoid(eta1.coords.at(0));
      const double q = sigmoid(eta2.coords.at(0));
      double kl = 0;
      if (p > 0) kl += p * (std::log(p) - std::log(q));
      if (p < 1) kl += (1 - p) * (std::log1p(-p) - std::log1p(-q));
      return kl;
    }
  }
  throw UsageError("kl_exact: unknown family");
}

KlReport verify_kl_domination(const FamilyModel& fam, int trials,
                              std::uint64_t seed) {
  validate(fam);
  if (trials < 1) throw UsageError("verify_kl_domination: trials >= 1");
  const int dim = fam.kind == FamilyKind::cpt ? fam.v : 1;
  const double range = fam.kind == FamilyKind::gaussian
                           ? 10.0
                           : (fam.kind == FamilyKind::cpt ? 4.0 : 6.0);
  KlReport rep;
  rep.trials = trials;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  auto rng = make_rng(derive_seed(seed, 0x6b6cu));
  auto draw = [&] {
    NaturalParam eta;
    eta.coords.reserve(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      eta.coords.push_back((2.0 * uniform01(rng) - 1.0) * range);
    }
    return eta;
  };
  for (int t = 0; t < trials; ++t) {
    const NaturalParam e1 = draw();
    const NaturalParam e2 = draw();
    const double kl = kl_exact(fam, e1, e2);
    const double d = delta_bound(fam, e1, e2);
    if (kl < -1e-9 || kl > d + 1e-9) ++rep.violations;
    rep.max_kl = std::max(rep.max_kl, kl);
    rep.max_excess = std::max(rep.max_excess, std::max(kl - d, -kl));
  }
  return rep;
}

namespace {

// Stream tags keep the per-purpose substreams independent.
enum : std::uint64_t { kTagShared = 1, kTagNode = 2, kTagSample = 3 };

NodeParams draw_node_params(const ParamMap& pm, int node,
                            std::uint64_t parent_mask, int n_parents,
                            int topo_pos, double shared_sigma,
                            double shared_mu) {
  NodeParams np;
  np.n_parents = n_parents;
  auto rng = make_rng(derive_seed(pm.seed, kTagNode, std::uint64_t(node) + 1,
                                  parent_mask));
  const FamilyModel& fam = pm.family;
  switch (fam.kind) {
    case FamilyKind::cpt: {
      std::size_t rows = 1;
      for (int j = 0; j < n_parents; ++j) rows *= std::size_t(fam.v);
      np.table.resize(rows);
      for (auto& row : np.table) {
        row.resize(static_cast<std::size_t>(fam.v));
        double total = 0;
        for (double& cell : row) {
          double u = uniform01(rng);
          while (u <= 0) u = uniform01(rng);
          cell = -std::log(u);  // Exp(1); normalized -> Dirichlet(1)
          total += cell;
        }
        // Affine rescale onto the theta_min-floored simplex.
        for (double& cell : row) {
          cell = fam.theta_min + (1.0 - fam.v * fam.theta_min) * cell / total;
        }
      }
      return np;
    }
    case FamilyKind::gaussian: {
      np.sigma = shared_sigma;
      np.mean = shared_mu;
      if (n_parents > 0) {
        if (topo_pos < 2) {
          throw UsageError("gaussian: node with parents at topological root");
        }
        const double r_max = 1.0 / std::sqrt(2.0 * (topo_pos - 1));
        np.weights.resize(static_cast<std::size_t>(n_parents));
        double norm2 = 0;
        for (double& w : np.weights) {
          w = standard_normal(rng);
          norm2 += w * w;
        }
        const double r = uniform01(rng) * r_max;
        const double scale = norm2 > 0 ? r / std::sqrt(norm2) : 0.0;
        for (double& w : np.weights) w *= scale;
      }
      return np;
    }
    case FamilyKind::noisy_or:
      np.theta = fam.theta;
      return np;
    case FamilyKind::logistic: {
      if (n_parents > 0) {
        np.weights.resize(static_cast<std::size_t>(n_parents));
        double total = 0;
        for (double& w : np.weights) {
          double u = uniform01(rng);
          while (u <= 0) u = uniform01(rng);
          w = -std::log(u);
          total += w;
        }
        const double radius =
            fam.w_max_1 *
            std::pow(uniform01(rng), 1.0 / static_cast<double>(n_parents));
        for (double& w : np.weights) {
          w *= radius / total;
          if (rng() & 1u) w = -w;
        }
      }
      return np;
    }
  }
  throw UsageError("materialize: unknown family");
}

}  // namespace

BayesNet materialize(const ParamMap& pm, const Dag& g) {
  validate(pm.family);
  validate(g);
  BayesNet bn;
  bn.g = g;
  bn.family = pm.family;
  bn.nodes.resize(static_cast<std::size_t>(g.m));

  double shared_sigma = 1.0;
  double shared_mu = 0.0;
  if (pm.family.kind == FamilyKind::gaussian) {
    auto rng = make_rng(derive_seed(pm.seed, kTagShared));
    shared_sigma = pm.family.sigma_min +
                   uniform01(rng) * (pm.family.sigma_max - pm.family.sigma_min);
    shared_mu = pm.family.mu_a +
                uniform01(rng) * (pm.family.mu_b - pm.family.mu_a);
  }

  const auto order = topological_order(g);
  std::vector<int> topo_pos(static_cast<std::size_t>(g.m), 0);
  for (int i = 0; i < g.m; ++i) {
    topo_pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        i + 1;
  }
  for (int i = 0; i < g.m; ++i) {
    bn.nodes[static_cast<std::size_t>(i)] = draw_node_params(
        pm, i, g.parents[static_cast<std::size_t>(i)], g.in_degree(i),
        topo_pos[static_cast<std::size_t>(i)], shared_sigma, shared_mu);
  }
  return bn;
}

NodeParams root_params(const ParamMap& pm, int node) {
  validate(pm.family);
  double shared_sigma = 1.0;
  double shared_mu = 0.0;
  if (pm.family.kind == FamilyKind::gaussian) {
    auto rng = make_rng(derive_seed(pm.seed, kTagShared));
    shared_sigma = pm.family.sigma_min +
                   uniform01(rng) * (pm.family.sigma_max - pm.family.sigma_min);
    shared_mu = pm.family.mu_a +
                uniform01(rng) * (pm.family.mu_b - pm.family.mu_a);
  }
  return draw_node_params(pm, node, 0, 0, 1, shared_sigma, shared_mu);
}

namespace {

double bernoulli_success_prob(const BayesNet& bn, int node,
                              const std::vector<double>& pv) {
  const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
  switch (bn.family.kind) {
    case FamilyKind::noisy_or:
      if (np.n_parents == 0) return np.theta;
      return 1.0 - noisy_or_failure(np.theta, pv);
    case FamilyKind::logistic:
      return np.n_parents == 0 ? 0.5 : sigmoid(dot(np.weights, pv));
    default:
      throw UsageError("bernoulli_success_prob: not a binary family");
  }
}

}  // namespace

double conditional_log_density(const BayesNet& bn, int node,
                               const std::vector<double>& pv, double x) {
  const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
  if (static_cast<int>(pv.size()) != np.n_parents) {
    throw UsageError("conditional_log_density: parent dimension mismatch");
  }
  switch (bn.family.kind) {
    case FamilyKind::cpt: {
      const int xi = static_cast<int>(x);
      if (xi < 0 || xi >= bn.family.v) return kNegInf;
      const double p = np.table[static_cast<std::size_t>(cpt_config_index(
          bn.family.v, pv))][static_cast<std::size_t>(xi)];
      return p > 0 ? std::log(p) : kNegInf;
    }
    case FamilyKind::gaussian: {
      const double mean = np.n_parents == 0 ? np.mean : dot(np.weights, pv);
      const double var = np.sigma * np.sigma / 2.0;
      const double d = x - mean;
      return -0.5 * std::log(2.0 * std::numbers::pi * var) -
             d * d / (2.0 * var);
    }
    case FamilyKind::noisy_or:
    case FamilyKind::logistic: {
      const double p1 = bernoulli_success_prob(bn, node, pv);
      const double p = x > 0.5 ? p1 : 1.0 - p1;
      return p > 0 ? std::log(p) : kNegInf;
    }
  }
  throw UsageError("conditional_log_density: unknown family");
}

Dataset forward_sample(const BayesNet& bn, int n, std::uint64_t seed) {
  if (n < 0) throw UsageError("forward_sample: n must be >= 0");
  Dataset data;
  data.n = n;
  data.m = bn.g.m;
  data.rows.assign(static_cast<std::size_t>(n) *
                       static_cast<std::size_t>(bn.g.m),
                   0.0);
  const auto order = topological_order(bn.g);
  auto rng = make_rng(derive_seed(seed, kTagSample));
  std::vector<double> row(static_cast<std::size_t>(bn.g.m), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int node : order) {
      const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
      std::vector<double> pv;
      pv.reserve(static_cast<std::size_t>(np.n_parents));
      for (int p : bn.g.parent_list(node)) {
        pv.push_back(row[static_cast<std::size_t>(p)]);
      }
      double x = 0;
      switch (bn.family.kind) {
        case FamilyKind::cpt: {
          const auto& cells = np.table[static_cast<std::size_t>(
              cpt_config_index(bn.family.v, pv))];
          double u = uniform01(rng);
          int val = bn.family.v - 1;
          for (int j = 0; j < bn.family.v; ++j) {
            u -= cells[static_cast<std::size_t>(j)];
            if (u < 0) {
              val = j;
              break;
            }
          }
          x = val;
          break;
        }
        case FamilyKind::gaussian: {
          const double mean =
              np.n_parents == 0 ? np.mean : dot(np.weights, pv);
          x = mean + (np.sigma / std::numbers::sqrt2) * standard_normal(rng);
          break;
        }
        case FamilyKind::noisy_or:
        case FamilyKind::logistic: {
          x = uniform01(rng) < bernoulli_success_prob(bn, node, pv) ? 1.0
                                                                    : 0.0;
          break;
        }
      }
      row[static_cast<std::size_t>(node)] = x;
    }
    for (int c = 0; c < bn.g.m; ++c) {
      data.rows[static_cast<std::size_t>(r) *
                    static_cast<std::size_t>(bn.g.m) +
                static_cast<std::size_t>(c)] =
          row[static_cast<std::size_t>(c)];
    }
  }
  return data;
}

std::vector<double> joint_distribution(const BayesNet& bn) {
  if (!is_discrete(bn.family)) {
    throw CapabilityError("joint_distribution: continuous family");
  }
  const int v = support_size(bn.family);
  double states_d = 1;
  for (int i = 0; i < bn.g.m; ++i) states_d *= v;
  if (states_d > 1e6) {
    throw CapabilityError("joint_distribution: state space exceeds 10^6");
  }
  const std::size_t states = static_cast<std::size_t>(states_d);
  std::vector<double> mass(states, 0.0);
  std::vector<int> value(static_cast<std::size_t>(bn.g.m), 0);
  for (std::size_t s = 0; s < states; ++s) {
    std::size_t rest = s;
    for (int i = 0; i < bn.g.m; ++i) {
      value[static_cast<std::size_t>(i)] = static_cast<int>(rest % v);
      rest /= static_cast<std::size_t>(v);
    }
    double lp = 0;
    for (int i = 0; i < bn.g.m; ++i) {
      std::vector<double> pv;
      for (int p : bn.g.parent_list(i)) {
        pv.push_back(value[static_cast<std::size_t>(p)]);
      }
      lp += conditional_log_density(bn, i, pv,
                                    value[static_cast<std::size_t>(i)]);
    }
    mass[s] = std::exp(lp);
  }
  return mass;
}

double log_likelihood(const BayesNet& bn, const Dataset& data) {
  if (data.m != bn.g.m) throw UsageError("log_likelihood: shape mismatch");
  double total = 0;
  for (int r = 0; r < data.n; ++r) {
    for (int i = 0; i < bn.g.m; ++i) {
      std::vector<double> pv;
      for (int p : bn.g.parent_list(i)) pv.push_back(data.at(r, p));
      total += conditional_log_density(bn, i, pv, data.at(r, i));
    }
  }
  return total;
}

GaussianCov gaussian_joint_covariance(const BayesNet& bn) {
  if (bn.family.kind != FamilyKind::gaussian) {
    throw UsageError("gaussian_joint_covariance: gaussian nets only");
  }
  const int m = bn.g.m;
  const auto order = topological_order(bn.g);
  std::vector<int> pos(static_cast<std::size_t>(m), 0);  // 0-based
  for (int i = 0; i < m; ++i) {
    pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  }
  GaussianCov cov;
  cov.m = m;
  cov.sigma.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m),
                   0.0);
  cov.var_mu.assign(static_cast<std::size_t>(m), 0.0);
  auto at = [&](int r, int c) -> double& {
    return cov.sigma[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) +
                     static_cast<std::size_t>(c)];
  };
  for (int i = 0; i < m; ++i) {
    const int node = order[static_cast<std::size_t>(i)];
    const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
    const double cond_var = np.sigma * np.sigma / 2.0;
    // Weight vector over earlier topological positions, zero-padded.
    std::vector<double> wbar(static_cast<std::size_t>(i), 0.0);
    const auto plist = bn.g.parent_list(node);
    for (std::size_t j = 0; j < plist.size(); ++j) {
      wbar[static_cast<std::size_t>(pos[static_cast<std::size_t>(plist[j])])] =
          np.weights[j];
    }
    double var_mu = 0;
    for (int r = 0; r < i; ++r) {
      double cr = 0;
      for (int c = 0; c < i; ++c) {
        cr += at(r, c) * wbar[static_cast<std::size_t>(c)];
      }
      at(r, i) = cr;
      at(i, r) = cr;
      var_mu += wbar[static_cast<std::size_t>(r)] * cr;
    }
    cov.var_mu[static_cast<std::size_t>(i)] = np.n_parents ? var_mu : 0.0;
    at(i, i) = (np.n_parents ? var_mu : 0.0) + cond_var;
  }
  return cov;
}

}  // namespace bnl
