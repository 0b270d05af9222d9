#include "bnlimits/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "bnlimits/bounds.hpp"
#include "bnlimits/errors.hpp"
#include "bnlimits/rng.hpp"

namespace bnl {

namespace {
const double kLn2 = std::log(2.0);

double xlogx(double p) { return p > 0 ? p * std::log(p) : 0.0; }
}  // namespace

void validate(const FiniteJoint& j) {
  std::size_t size = 1;
  for (int d : j.dims) {
    if (d < 1) throw UsageError("FiniteJoint: dims must be >= 1");
    size *= static_cast<std::size_t>(d);
  }
  if (j.mass.size() != size) throw UsageError("FiniteJoint: mass size");
  double total = 0;
  for (double p : j.mass) {
    if (p < 0) throw UsageError("FiniteJoint: negative mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw UsageError("FiniteJoint: mass must sum to 1");
  }
}

namespace {

// Marginal entropy H(X_S) by bucketing states on the subset key.
double marginal_entropy(const FiniteJoint& j, const std::vector<int>& subset) {
  if (subset.empty()) return 0.0;
  std::size_t buckets = 1;
  for (int v : subset) buckets *= static_cast<std::size_t>(j.dims[v]);
  std::vector<double> marg(buckets, 0.0);
  const std::size_t n_vars = j.dims.size();
  std::vector<std::size_t> value(n_vars);
  for (std::size_t s = 0; s < j.mass.size(); ++s) {
    std::size_t rest = s;
    for (std::size_t v = 0; v < n_vars; ++v) {
      value[v] = rest % static_cast<std::size_t>(j.dims[v]);
      rest /= static_cast<std::size_t>(j.dims[v]);
    }
    std::size_t key = 0;
    std::size_t stride = 1;
    for (int v : subset) {
      key += value[static_cast<std::size_t>(v)] * stride;
      stride *= static_cast<std::size_t>(j.dims[v]);
    }
    marg[key] += j.mass[s];
  }
  double h = 0;
  for (double p : marg) h -= xlogx(p);
  return h;
}

}  // namespace

double entropy(const FiniteJoint& j, const std::vector<int>& vars,
               const std::vector<int>& given) {
  validate(j);
  for (int v : vars) {
    if (v < 0 || v >= static_cast<int>(j.dims.size())) {
      throw UsageError("entropy: variable index out of range");
    }
    if (std::find(given.begin(), given.end(), v) != given.end()) {
      throw UsageError("entropy: vars and given must be disjoint");
    }
  }
  std::vector<int> both = vars;
  both.insert(both.end(), given.begin(), given.end());
  return marginal_entropy(j, both) - marginal_entropy(j, given);
}

double fano_bound(double mi, double h) {
  if (!(h > 0)) throw DomainError("fano_bound: H must be positive");
  return 1.0 - (mi + kLn2) / h;
}

FanoCheck check_fano(const FiniteJoint& wxy, bool w_independent) {
  validate(wxy);
  if (wxy.dims.size() != 3) {
    throw UsageError("check_fano: joint must cover (W, X, Y)");
  }
  const int dw = wxy.dims[0];
  const int dx = wxy.dims[1];
  const int dy = wxy.dims[2];
  auto p = [&](int w, int x, int y) {
    return wxy.mass[static_cast<std::size_t>(w) +
                    static_cast<std::size_t>(dw) *
                        (static_cast<std::size_t>(x) +
                         static_cast<std::size_t>(dx) *
                             static_cast<std::size_t>(y))];
  };

  FanoCheck out;
  out.h_x_given_w = entropy(wxy, {1}, {0});
  out.mi_xy_given_w =
      entropy(wxy, {1}, {0}) - entropy(wxy, {1}, {0, 2});

  // Exhaustive Bayes estimator of X from Y alone.
  double correct = 0;
  for (int y = 0; y < dy; ++y) {
    double best = 0;
    for (int x = 0; x < dx; ++x) {
      double pxy = 0;
      for (int w = 0; w < dw; ++w) pxy += p(w, x, y);
      best = std::max(best, pxy);
    }
    correct += best;
  }
  out.bayes_error = 1.0 - correct;

  if (out.h_x_given_w > 0) {
    out.bound_conditional = fano_bound(out.mi_xy_given_w, out.h_x_given_w);
    out.holds_conditional = out.bayes_error >= out.bound_conditional - 1e-9;
  }

  if (w_independent) {
    // sup_w I(X; Y | W = w) over the conditional slices.
    double sup_mi = 0;
    for (int w = 0; w < dw; ++w) {
      double pw = 0;
      for (int x = 0; x < dx; ++x) {
        for (int y = 0; y < dy; ++y) pw += p(w, x, y);
      }
      if (pw <= 0) continue;
      FiniteJoint slice;
      slice.dims = {dx, dy};
      slice.mass.resize(static_cast<std::size_t>(dx) *
                        static_cast<std::size_t>(dy));
      for (int x = 0; x < dx; ++x) {
        for (int y = 0; y < dy; ++y) {
          slice.mass[static_cast<std::size_t>(x) +
                     static_cast<std::size_t>(dx) *
                         static_cast<std::size_t>(y)] = p(w, x, y) / pw;
        }
      }
      const double mi_w =
          entropy(slice, {0}, {}) - entropy(slice, {0}, {1});
      sup_mi = std::max(sup_mi, mi_w);
    }
    const double hx = entropy(wxy, {1}, {});
    if (hx > 0) {
      out.bound_sup = fano_bound(sup_mi, hx);
      out.holds_sup = out.bayes_error >= out.bound_sup - 1e-9;
    }
  }
  return out;
}

namespace {

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> out(n);
  double total = 0;
  for (double& x : out) {
    double u = uniform01(rng);
    while (u <= 0) u = uniform01(rng);
    x = -std::log(u);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

FiniteJoint random_fano_model(std::mt19937_64& rng, bool w_independent) {
  const int dw = 2 + static_cast<int>(rng() % 3);
  const int dx = 2 + static_cast<int>(rng() % 3);
  const int dy = 2 + static_cast<int>(rng() % 3);
  std::vector<double> pwx;
  if (w_independent) {
    const auto pw = random_simplex(static_cast<std::size_t>(dw), rng);
    const auto px = random_simplex(static_cast<std::size_t>(dx), rng);
    pwx.resize(static_cast<std::size_t>(dw) * static_cast<std::size_t>(dx));
    for (int w = 0; w < dw; ++w) {
      for (int x = 0; x < dx; ++x) {
        pwx[static_cast<std::size_t>(w) +
            static_cast<std::size_t>(dw) * static_cast<std::size_t>(x)] =
            pw[static_cast<std::size_t>(w)] * px[static_cast<std::size_t>(x)];
      }
    }
  } else {
    pwx = random_simplex(
        static_cast<std::size_t>(dw) * static_cast<std::size_t>(dx), rng);
  }
  FiniteJoint j;
  j.dims = {dw, dx, dy};
  j.mass.resize(static_cast<std::size_t>(dw) * static_cast<std::size_t>(dx) *
                static_cast<std::size_t>(dy));
  for (int w = 0; w < dw; ++w) {
    for (int x = 0; x < dx; ++x) {
      const auto py = random_simplex(static_cast<std::size_t>(dy), rng);
      for (int y = 0; y < dy; ++y) {
        j.mass[static_cast<std::size_t>(w) +
               static_cast<std::size_t>(dw) *
                   (static_cast<std::size_t>(x) +
                    static_cast<std::size_t>(dx) *
                        static_cast<std::size_t>(y))] =
            pwx[static_cast<std::size_t>(w) +
                static_cast<std::size_t>(dw) * static_cast<std::size_t>(x)] *
            py[static_cast<std::size_t>(y)];
      }
    }
  }
  return j;
}

}  // namespace

FanoReport verify_fano_extension(int trials, std::uint64_t seed) {
  if (trials < 1) throw UsageError("verify_fano_extension: trials >= 1");
  FanoReport rep;
  rep.trials = trials;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const bool indep = t % 2 == 0;
    auto rng = make_rng(derive_seed(seed, 0xfa40u, std::uint64_t(t)));
    const FiniteJoint j = random_fano_model(rng, indep);
    const FanoCheck chk = check_fano(j, indep);
    if (!chk.holds_conditional || !chk.holds_sup) ++rep.violations;
    if (chk.h_x_given_w > 0) {
      rep.min_margin =
          std::min(rep.min_margin, chk.bayes_error - chk.bound_conditional);
    }
    if (indep) {
      rep.min_margin =
          std::min(rep.min_margin, chk.bayes_error - chk.bound_sup);
    }
  }
  return rep;
}

namespace {

// Materialized nets for every ensemble member, plus their joints.
struct EnsembleInstance {
  std::shared_ptr<const std::vector<Dag>> members;
  std::vector<BayesNet> nets;
  std::vector<std::vector<double>> joints;  // discrete only
};

EnsembleInstance instantiate(const EnsembleSpec& spec, const ParamMap& pm,
                             bool need_joints) {
  EnsembleInstance inst;
  inst.members = ensemble_members(spec);
  inst.nets.reserve(inst.members->size());
  for (const Dag& g : *inst.members) {
    inst.nets.push_back(materialize(pm, g));
  }
  if (need_joints) {
    inst.joints.reserve(inst.nets.size());
    for (const auto& bn : inst.nets) {
      inst.joints.push_back(joint_distribution(bn));
    }
  }
  return inst;
}

// E over the parents' exact marginal of KL(P_i(. | parents) || Q0_i), or of
// Delta(eta_i, eta_0) when delta_form is set.
double expected_div_to_root(const BayesNet& bn, const std::vector<double>& joint,
                            const ParamMap& pm, int node, bool delta_form) {
  auto div = [&](const NaturalParam& eta, const NaturalParam& eta0) {
    return delta_form ? delta_bound(bn.family, eta, eta0)
                      : kl_exact(bn.family, eta, eta0);
  };
  const int v = support_size(bn.family);
  const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
  const NodeParams q0 = root_params(pm, node);
  const NaturalParam eta0 = natural_param(bn.family, q0, {});
  const auto plist = bn.g.parent_list(node);
  if (plist.empty()) {
    const NaturalParam eta = natural_param(bn.family, np, {});
    return div(eta, eta0);
  }
  std::size_t configs = 1;
  for (std::size_t i = 0; i < plist.size(); ++i) {
    configs *= static_cast<std::size_t>(v);
  }
  // Parent-config marginals from the joint.
  std::vector<double> pmarg(configs, 0.0);
  const int m = bn.g.m;
  std::vector<int> value(static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < joint.size(); ++s) {
    std::size_t rest = s;
    for (int i = 0; i < m; ++i) {
      value[static_cast<std::size_t>(i)] = static_cast<int>(rest % v);
      rest /= static_cast<std::size_t>(v);
    }
    std::size_t key = 0;
    std::size_t stride = 1;
    for (int p : plist) {
      key += static_cast<std::size_t>(value[static_cast<std::size_t>(p)]) *
             stride;
      stride *= static_cast<std::size_t>(v);
    }
    pmarg[key] += joint[s];
  }
  double total = 0;
  std::vector<double> pv(plist.size());
  for (std::size_t cfg = 0; cfg < configs; ++cfg) {
    if (pmarg[cfg] <= 0) continue;
    std::size_t rest = cfg;
    for (std::size_t i = 0; i < plist.size(); ++i) {
      pv[i] = static_cast<double>(rest % static_cast<std::size_t>(v));
      rest /= static_cast<std::size_t>(v);
    }
    const NaturalParam eta = natural_param(bn.family, np, pv);
    total += pmarg[cfg] * div(eta, eta0);
  }
  return total;
}

// Gaussian route: E[Delta(eta_i, eta_0)] = 2((E mu_i - mu)^2 + Var mu_i)/s^2.
double expected_delta_gaussian(const BayesNet& bn, int node,
                               const std::vector<double>& means,
                               const GaussianCov& cov,
                               const std::vector<int>& pos) {
  const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
  if (np.n_parents == 0) return 0.0;
  const auto plist = bn.g.parent_list(node);
  double e_mu = 0;
  for (std::size_t j = 0; j < plist.size(); ++j) {
    e_mu += np.weights[j] * means[static_cast<std::size_t>(plist[j])];
  }
  const double var_mu =
      cov.var_mu[static_cast<std::size_t>(pos[static_cast<std::size_t>(node)])];
  const double d = e_mu - np.mean;
  return 2.0 * (d * d + var_mu) / (np.sigma * np.sigma);
}

std::vector<double> gaussian_node_means(const BayesNet& bn) {
  std::vector<double> means(static_cast<std::size_t>(bn.g.m), 0.0);
  for (int node : topological_order(bn.g)) {
    const NodeParams& np = bn.nodes[static_cast<std::size_t>(node)];
    if (np.n_parents == 0) {
      means[static_cast<std::size_t>(node)] = np.mean;
    } else {
      const auto plist = bn.g.parent_list(node);
      double mu = 0;
      for (std::size_t j = 0; j < plist.size(); ++j) {
        mu += np.weights[j] * means[static_cast<std::size_t>(plist[j])];
      }
      means[static_cast<std::size_t>(node)] = mu;
    }
  }
  return means;
}

}  // namespace

double mi_upper_bound(const EnsembleSpec& spec, const ParamMap& pm, int n) {
  validate(spec);
  if (n < 0) throw UsageError("mi_upper_bound: n must be >= 0");
  const bool gaussian = pm.family.kind == FamilyKind::gaussian;
  EnsembleInstance inst = instantiate(spec, pm, !gaussian);
  const auto layer = spec.layered() ? node_layers(spec) : std::vector<int>{};
  const int last_layer =
      spec.layered() ? static_cast<int>(spec.layers.size()) - 1 : -1;
  const int m_l = spec.layered() ? spec.layers.back() : 0;

  double accum = 0;
  for (std::size_t gi = 0; gi < inst.nets.size(); ++gi) {
    const BayesNet& bn = inst.nets[gi];
    std::vector<double> means;
    GaussianCov cov;
    std::vector<int> pos;
    if (gaussian) {
      means = gaussian_node_means(bn);
      cov = gaussian_joint_covariance(bn);
      const auto order = topological_order(bn.g);
      pos.assign(static_cast<std::size_t>(bn.g.m), 0);
      for (int i = 0; i < bn.g.m; ++i) {
        pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
      }
    }
    auto node_term = [&](int i) {
      return gaussian
                 ? expected_delta_gaussian(bn, i, means, cov, pos)
                 : expected_div_to_root(bn, inst.joints[gi], pm, i, false);
    };
    if (spec.layered()) {
      double mx = 0;
      for (int i = 0; i < spec.m; ++i) {
        if (layer[static_cast<std::size_t>(i)] == last_layer) continue;
        mx = std::max(mx, node_term(i));
      }
      accum += static_cast<double>(spec.m - m_l) * mx;
    } else {
      for (int i = 0; i < spec.m; ++i) accum += node_term(i);
    }
  }
  return n * accum / static_cast<double>(inst.nets.size());
}

MiReport mi_exact(const EnsembleSpec& spec, const ParamMap& pm, int n) {
  validate(spec);
  if (!is_discrete(pm.family)) {
    throw CapabilityError("mi_exact: discrete families only");
  }
  if (n < 0) throw UsageError("mi_exact: n must be >= 0");
  EnsembleInstance inst = instantiate(spec, pm, true);
  const std::size_t c = inst.nets.size();
  const std::size_t states = c > 0 ? inst.joints[0].size() : 0;
  double dataset_count = 1;
  for (int t = 0; t < n; ++t) dataset_count *= static_cast<double>(states);
  if (static_cast<double>(c) * dataset_count > 1e7) {
    throw CapabilityError("mi_exact: |ensemble| * v^(n m) exceeds 10^7");
  }

  MiReport rep;
  rep.upper_bound_lemma7 = mi_upper_bound(spec, pm, n);
  rep.upper_bound_assumption =
      n * spec.m * delta_max(pm.family);
  if (n == 0 || c <= 1) return rep;

  const std::size_t n_datasets = static_cast<std::size_t>(dataset_count);
  std::vector<std::size_t> rows(static_cast<std::size_t>(n), 0);
  std::vector<double> ps(c);
  double mi = 0;
  for (std::size_t d = 0; d < n_datasets; ++d) {
    double mix = 0;
    for (std::size_t gi = 0; gi < c; ++gi) {
      double p = 1;
      for (int t = 0; t < n; ++t) {
        p *= inst.joints[gi][rows[static_cast<std::size_t>(t)]];
      }
      ps[gi] = p;
      mix += p;
    }
    mix /= static_cast<double>(c);
    if (mix > 0) {
      for (std::size_t gi = 0; gi < c; ++gi) {
        if (ps[gi] > 0) mi += ps[gi] * std::log(ps[gi] / mix);
      }
    }
    // odometer over rows
    for (int t = 0; t < n; ++t) {
      if (++rows[static_cast<std::size_t>(t)] < states) break;
      rows[static_cast<std::size_t>(t)] = 0;
    }
  }
  rep.exact_or_estimate = mi / static_cast<double>(c);
  return rep;
}

double empirical_delta_max(const EnsembleSpec& spec, const ParamMap& pm) {
  validate(spec);
  const bool gaussian = pm.family.kind == FamilyKind::gaussian;
  EnsembleInstance inst = instantiate(spec, pm, !gaussian);
  double mx = 0;
  for (std::size_t gi = 0; gi < inst.nets.size(); ++gi) {
    const BayesNet& bn = inst.nets[gi];
    if (gaussian) {
      const auto means = gaussian_node_means(bn);
      const GaussianCov cov = gaussian_joint_covariance(bn);
      const auto order = topological_order(bn.g);
      std::vector<int> pos(static_cast<std::size_t>(bn.g.m), 0);
      for (int i = 0; i < bn.g.m; ++i) {
        pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
      }
      for (int i = 0; i < spec.m; ++i) {
        mx = std::max(mx, expected_delta_gaussian(bn, i, means, cov, pos));
      }
    } else {
      for (int i = 0; i < spec.m; ++i) {
        mx = std::max(mx,
                      expected_div_to_root(bn, inst.joints[gi], pm, i, true));
      }
    }
  }
  return mx;
}

MiReport mi_monte_carlo(const EnsembleSpec& spec, const ParamMap& pm, int n,
                        int trials, std::uint64_t seed) {
  validate(spec);
  if (!is_discrete(pm.family)) {
    throw CapabilityError("mi_monte_carlo: discrete families only");
  }
  if (trials < 1) throw UsageError("mi_monte_carlo: trials must be >= 1");
  EnsembleInstance inst = instantiate(spec, pm, false);
  const std::size_t c = inst.nets.size();

  MiReport rep;
  rep.upper_bound_lemma7 = mi_upper_bound(spec, pm, n);
  rep.upper_bound_assumption = n * spec.m * delta_max(pm.family);
  rep.se_unreliable = trials < 2;

  double sum = 0;
  double sum_sq = 0;
  std::vector<double> ll(c);
  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(derive_seed(seed, 0x3141u, std::uint64_t(t)));
    const std::size_t gi = rng() % c;
    const Dataset data =
        forward_sample(inst.nets[gi], n,
                       derive_seed(seed, 0x3142u, std::uint64_t(t)));
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t gj = 0; gj < c; ++gj) {
      ll[gj] = log_likelihood(inst.nets[gj], data);
      hi = std::max(hi, ll[gj]);
    }
    double z = 0;
    for (std::size_t gj = 0; gj < c; ++gj) z += std::exp(ll[gj] - hi);
    const double log_mix = hi + std::log(z / static_cast<double>(c));
    const double value = ll[gi] - log_mix;
    sum += value;
    sum_sq += value * value;
  }
  const double mean = sum / trials;
  rep.exact_or_estimate = mean;
  if (trials > 1) {
    const double var =
        std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1.0));
    rep.std_error = std::sqrt(var / trials);
  }
  return rep;
}

}  // namespace bnl
