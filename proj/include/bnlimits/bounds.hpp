#ifndef BNLIMITS_BOUNDS_HPP
#define BNLIMITS_BOUNDS_HPP

#include <optional>
#include <string>
#include <vector>

#include "bnlimits/ensembles.hpp"
#include "bnlimits/expfam.hpp"

namespace bnl {

struct BoundReport {
  EnsembleSpec ensemble;
  FamilyModel family;
  double delta_max = 0.0;
  double log_size_lb = 0.0;
  double threshold_L = 0.0;  // raw, never clamped
  bool vacuous = false;      // raw threshold <= 0
  std::optional<double> remainder_R;  // R(m, k) for the corollary form
  std::string note;
};

// Closed-form per-family Delta_max upper bound, in nats.
double delta_max(const FamilyModel& fam);

// Sample-count thresholds L(.) per ensemble kind, from Delta_max.
BoundReport threshold(const EnsembleSpec& spec, double delta);
BoundReport threshold(const EnsembleSpec& spec, const FamilyModel& fam);

// Fundamental-limit form for general (non-restricted) ensembles; the sparse
// variant carries the remainder R(m, k).
BoundReport threshold_corollary(int m, std::optional<int> k, double delta);
double remainder_R(int m, int k);

// One cell of the summary grid. `value` is the order-level lower bound:
// m / Delta_max (non-sparse) or (k ln m + k^2/m) / Delta_max (sparse).
struct Table1Cell {
  FamilyModel family;
  bool sparse = false;
  double delta_max = 0.0;
  double value = 0.0;
};

// 4 families x {non-sparse, sparse}; requires one model per family kind.
std::vector<Table1Cell> table1(int m, int k,
                               const std::vector<FamilyModel>& families);

}  // namespace bnl

#endif
