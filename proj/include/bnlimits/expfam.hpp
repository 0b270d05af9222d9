#ifndef BNLIMITS_EXPFAM_HPP
#define BNLIMITS_EXPFAM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "bnlimits/dag.hpp"

namespace bnl {

enum class FamilyKind { cpt, gaussian, noisy_or, logistic };

// Conditional-distribution family with its hyperparameters. Only the fields
// of the active kind are meaningful.
struct FamilyModel {
  FamilyKind kind = FamilyKind::cpt;

  int v = 2;               // cpt support size
  double theta_min = 0.1;  // cpt minimum cell probability

  double mu_a = 0.0;  // gaussian root-mean range
  double mu_b = 0.0;
  double sigma_min = 1.0;  // gaussian shared std-dev range
  double sigma_max = 1.0;

  double theta = 0.25;  // noisy-or shared failure probability

  double w_max_1 = 1.0;  // logistic max l1 weight norm

  // Overrides the ball-derived w_max = 1/sqrt(2) in the gaussian
  // Delta_max closed form (symbolic Table 1 reproduction).
  std::optional<double> w_max_override;

  static FamilyModel make_cpt(int v, double theta_min);
  static FamilyModel make_gaussian(double mu_a, double mu_b, double sigma_min,
                                   double sigma_max);
  static FamilyModel make_noisy_or(double theta);
  static FamilyModel make_logistic(double w_max_1);
};

void validate(const FamilyModel& fam);
bool is_discrete(const FamilyModel& fam);
int support_size(const FamilyModel& fam);  // v for cpt, 2 for binary families

// Canonical exponential-family coordinates (nats scale).
struct NaturalParam {
  std::vector<double> coords;
};

// Materialized conditional parameters for one node.
struct NodeParams {
  // cpt: table[config] is a length-v probability row; configs enumerate
  // parent assignments base-v over the sorted parent list.
  std::vector<std::vector<double>> table;
  // gaussian / logistic weights, aligned with the sorted parent list.
  std::vector<double> weights;
  double mean = 0.0;   // gaussian root mean (shared across nodes)
  double sigma = 1.0;  // gaussian shared sigma; conditional variance sigma^2/2
  double theta = 0.0;  // noisy-or shared failure probability
  int n_parents = 0;
};

struct BayesNet {
  Dag g;
  FamilyModel family;
  std::vector<NodeParams> nodes;
};

struct Dataset {
  int n = 0;
  int m = 0;
  std::vector<double> rows;  // row-major n x m

  double at(int r, int c) const {
    return rows[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) +
                static_cast<std::size_t>(c)];
  }
};

// Deterministic policy assigning node conditionals from
// (seed, node index, parent set, canonical topological position).
struct ParamMap {
  FamilyModel family;
  std::uint64_t seed = 0;
};

// parent_values follow the sorted parent list of the node.
NaturalParam natural_param(const FamilyModel& fam, const NodeParams& np,
                           const std::vector<double>& parent_values);

std::vector<double> expected_suff_stat(const FamilyModel& fam,
                                       const NaturalParam& eta);

// Log-partition psi(eta); expected_suff_stat is its gradient.
double log_partition(const FamilyModel& fam, const NaturalParam& eta);

// Delta(eta1, eta2) = (eta1 - eta2) . (mu(eta1) - mu(eta2)), nats.
double delta_bound(const FamilyModel& fam, const NaturalParam& eta1,
                   const NaturalParam& eta2);

// Exact KL between two members of the family given natural parameters.
double kl_exact(const FamilyModel& fam, const NaturalParam& eta1,
                const NaturalParam& eta2);

struct KlReport {
  int trials = 0;
  int violations = 0;
  double max_kl = 0.0;
  double max_excess = 0.0;  // max over trials of max(kl - delta, -kl)
};

// Property run of the divergence sandwich 0 <= KL <= Delta on random
// natural-parameter pairs (tolerance 1e-9).
KlReport verify_kl_domination(const FamilyModel& fam, int trials,
                              std::uint64_t seed);

BayesNet materialize(const ParamMap& pm, const Dag& g);

// Root conditional Q0 for a node (the empty-parent law under the same map).
NodeParams root_params(const ParamMap& pm, int node);

Dataset forward_sample(const BayesNet& bn, int n, std::uint64_t seed);

// Exact joint over support_size^m states, state index little-endian in the
// node index (node 0 varies fastest). Discrete families only.
std::vector<double> joint_distribution(const BayesNet& bn);

double log_likelihood(const BayesNet& bn, const Dataset& data);

// Per-row conditional log mass/density of node i given its parent values.
double conditional_log_density(const BayesNet& bn, int node,
                               const std::vector<double>& parent_values,
                               double x);

// Exact joint covariance of a gaussian net over nodes in canonical
// topological order, with the conditional-mean variances per node.
struct GaussianCov {
  int m = 0;
  std::vector<double> sigma;   // row-major m x m, topological order
  std::vector<double> var_mu;  // Var(mu_(i)) per topological position
};
GaussianCov gaussian_joint_covariance(const BayesNet& bn);

}  // namespace bnl

#endif
