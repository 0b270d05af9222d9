#ifndef BNLIMITS_INFOTHEORY_HPP
#define BNLIMITS_INFOTHEORY_HPP

#include <cstdint>
#include <vector>

#include "bnlimits/ensembles.hpp"
#include "bnlimits/expfam.hpp"

namespace bnl {

// Dense joint over finitely many variables; state index is little-endian
// (variable 0 varies fastest).
struct FiniteJoint {
  std::vector<int> dims;
  std::vector<double> mass;
};

void validate(const FiniteJoint& j);

// H(vars | given) in nats; subsets must be disjoint.
double entropy(const FiniteJoint& j, const std::vector<int>& vars,
               const std::vector<int>& given);

// 1 - (mi + ln 2) / h; may be negative (vacuous).
double fano_bound(double mi, double h);

// Exact check of the latent-variable Fano inequality on a (W, X, Y) joint
// (variables in that order) with the exhaustive Bayes estimator of X from Y.
struct FanoCheck {
  double bayes_error = 0.0;
  double h_x_given_w = 0.0;
  double mi_xy_given_w = 0.0;
  double bound_conditional = 0.0;  // eq. with I(Y;X|W) and H(X|W)
  double bound_sup = 0.0;          // eq. with sup_w I(X;Y|W=w) and H(X)
  bool holds_conditional = true;
  bool holds_sup = true;  // only meaningful when W and X are independent
};
FanoCheck check_fano(const FiniteJoint& wxy, bool w_independent);

struct FanoReport {
  int trials = 0;
  int violations = 0;
  double min_margin = 0.0;  // min over trials of (error - bound)
};
// Random finite (W, X, Y) models, both the dependent- and independent-W
// constructions. Exact computation; zero violations expected.
FanoReport verify_fano_extension(int trials, std::uint64_t seed);

struct MiReport {
  double exact_or_estimate = 0.0;
  double std_error = 0.0;  // 0 for exact
  bool se_unreliable = false;
  double upper_bound_lemma7 = 0.0;      // averaged-KL ensemble bound
  double upper_bound_assumption = 0.0;  // n * m * Delta_max
};

// Exact I(S; G | Theta) by full dataset enumeration (discrete families,
// |ensemble| * v^(n m) <= 10^7).
MiReport mi_exact(const EnsembleSpec& spec, const ParamMap& pm, int n);

// Averaged-KL upper bound on I(S; G | Theta); layered specs use the
// per-layer max form with the (m - m_l) factor.
double mi_upper_bound(const EnsembleSpec& spec, const ParamMap& pm, int n);

// Plug-in estimate: sampled (G, S) pairs, exact inner likelihoods, exact
// log-mean-exp mixture over the enumerated ensemble.
MiReport mi_monte_carlo(const EnsembleSpec& spec, const ParamMap& pm, int n,
                        int trials, std::uint64_t seed);

// Instance-level Assumption-1 constant for a fixed parameter map:
// max over ensemble members and nodes of E[Delta(eta_i, eta_0)], computed
// exactly (parent marginals for discrete, covariance recursion for gaussian).
double empirical_delta_max(const EnsembleSpec& spec, const ParamMap& pm);

}  // namespace bnl

#endif
