#include "bnlimits/bounds.hpp"

#include <cmath>
#include <numbers>

#include "bnlimits/errors.hpp"

namespace bnl {

namespace {
const double kLn2 = std::log(2.0);
}

double delta_max(const FamilyModel& fam) {
  validate(fam);
  switch (fam.kind) {
    case FamilyKind::cpt:
      return 4.0 * std::log(1.0 / fam.theta_min);
    case FamilyKind::gaussian: {
      const double mu_max = std::max(std::abs(fam.mu_a), std::abs(fam.mu_b));
      // Tightest non-root ball has radius 1/sqrt(2) (topological position 2).
      const double w_max =
          fam.w_max_override.value_or(1.0 / std::numbers::sqrt2);
      return 1.0 + 2.0 * mu_max * mu_max * (w_max * w_max + 1.0) /
                       (fam.sigma_min * fam.sigma_min);
    }
    case FamilyKind::noisy_or:
      return 2.0 * std::abs(std::log(fam.theta / (1.0 - fam.theta)));
    case FamilyKind::logistic:
      return fam.w_max_1 / 2.0;
  }
  throw UsageError("delta_max: unknown family");
}

BoundReport threshold(const EnsembleSpec& spec, double delta) {
  validate(spec);
  if (!(delta > 0)) {
    throw DomainError(
        "threshold: Delta_max must be positive (noisy-OR at theta = 1/2 has "
        "no distinguishing signal and is rejected)");
  }
  BoundReport rep;
  rep.ensemble = spec;
  rep.delta_max = delta;
  rep.log_size_lb = log_size_lower_bound(spec);
  const int m = spec.m;
  switch (spec.kind) {
    case EnsembleKind::restricted_all:
      rep.threshold_L = (kLn2 / delta) * ((m - 3) / 2.0 - 1.0 / m);
      break;
    case EnsembleKind::restricted_sparse: {
      const int k = *spec.k;
      if (k <= 1 || m <= 2) {
        throw DomainError("threshold: sparse form needs k > 1 and m > 2");
      }
      const double braces = std::lgamma(m - 1.0) - std::lgamma(k + 1.0) -
                            (m - k - 2.0) * std::log(double(k));
      rep.threshold_L =
          (k * braces + (k * (k - 3) / 2.0 - 1.0) * kLn2) / (2.0 * m * delta);
      rep.note =
          "numerator uses {k(k-3)/2 - 1} ln 2; the log-size lower bound "
          "carries +1, a discrepancy of ln 2 / (m Delta)";
      break;
    }
    case EnsembleKind::layered_all: {
      const int m_l = spec.layers.back();
      if (m == m_l) {
        throw DomainError("threshold: single-layer ensemble has one member");
      }
      double cross = 0;
      for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
        cross += double(spec.layers[i + 1]) * double(spec.layers[i]);
      }
      rep.threshold_L = kLn2 * (cross - 2.0) / (2.0 * (m - m_l) * delta);
      break;
    }
    case EnsembleKind::layered_sparse: {
      const int m_l = spec.layers.back();
      if (m == m_l) {
        throw DomainError("threshold: single-layer ensemble has one member");
      }
      const double k = double(*spec.k);
      double s = 0;
      for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
        s += double(spec.layers[i]) * std::log(double(spec.layers[i + 1]) / k);
      }
      rep.threshold_L = (k * s - 2.0 * kLn2) / (2.0 * (m - m_l) * delta);
      break;
    }
  }
  rep.vacuous = rep.threshold_L <= 0;
  return rep;
}

BoundReport threshold(const EnsembleSpec& spec, const FamilyModel& fam) {
  BoundReport rep = threshold(spec, delta_max(fam));
  rep.family = fam;
  return rep;
}

double remainder_R(int m, int k) {
  if (m < 3 || k < 1 || k >= m) {
    throw DomainError("remainder_R: needs m >= 3 and 1 <= k < m");
  }
  return (double(k) / m) * ((m - 2.0) + 2.0 * std::log(m - 2.0) +
                            std::lgamma(k + 1.0) +
                            (m - k - 2.0) * std::log(double(k))) +
         kLn2 / m;
}

BoundReport threshold_corollary(int m, std::optional<int> k, double delta) {
  if (!(delta > 0)) throw DomainError("threshold_corollary: Delta_max <= 0");
  if (m < 1) throw UsageError("threshold_corollary: m must be >= 1");
  BoundReport rep;
  rep.delta_max = delta;
  if (!k.has_value()) {
    rep.ensemble.kind = EnsembleKind::restricted_all;
    rep.ensemble.m = m;
    rep.log_size_lb = log_size_lower_bound(rep.ensemble);
    rep.threshold_L = (kLn2 / delta) * ((m - 3) / 2.0 - 1.0 / m);
    rep.vacuous = rep.threshold_L <= 0;
    return rep;
  }
  if (*k < 1) throw DomainError("threshold_corollary: sparse form needs k >= 1");
  if (m < 3 || *k >= m) {
    throw DomainError("threshold_corollary: sparse form needs m >= 3, k < m");
  }
  const double R = remainder_R(m, *k);
  rep.ensemble.kind = EnsembleKind::restricted_sparse;
  rep.ensemble.m = m;
  rep.ensemble.k = k;
  rep.remainder_R = R;
  rep.threshold_L = (1.0 / (2.0 * delta)) *
                    (*k * std::log(m - 2.0) +
                     *k * (*k - 3.0) * kLn2 / (2.0 * m) - R);
  rep.vacuous = rep.threshold_L <= 0;
  return rep;
}

std::vector<Table1Cell> table1(int m, int k,
                               const std::vector<FamilyModel>& families) {
  if (families.size() != 4) {
    throw UsageError("table1: exactly four family models required");
  }
  bool seen[4] = {false, false, false, false};
  for (const auto& f : families) seen[static_cast<int>(f.kind)] = true;
  if (!(seen[0] && seen[1] && seen[2] && seen[3])) {
    throw UsageError("table1: one model per family kind required");
  }
  if (m < 3 || k < 1 || k >= m) {
    throw DomainError("table1: needs m >= 3 and 1 <= k < m");
  }
  std::vector<Table1Cell> cells;
  for (const auto& fam : families) {
    const double d = delta_max(fam);
    if (!(d > 0)) {
      throw DomainError("table1: family has Delta_max <= 0");
    }
    const double sparse_order =
        k * std::log(double(m)) + double(k) * k / m;
    cells.push_back({fam, false, d, double(m) / d});
    cells.push_back({fam, true, d, sparse_order / d});
  }
  return cells;
}

}  // namespace bnl
