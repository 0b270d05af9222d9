#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bnlimits/bounds.hpp"
#include "bnlimits/errors.hpp"
#include "bnlimits/infotheory.hpp"

using namespace bnl;

namespace {

const double kLn2 = std::log(2.0);

EnsembleSpec restricted(int m, std::optional<int> k = std::nullopt) {
  EnsembleSpec s;
  s.kind = k ? EnsembleKind::restricted_sparse : EnsembleKind::restricted_all;
  s.m = m;
  s.k = k;
  return s;
}

EnsembleSpec layered(std::vector<int> layers,
                     std::optional<int> k = std::nullopt) {
  EnsembleSpec s;
  s.kind = k ? EnsembleKind::layered_sparse : EnsembleKind::layered_all;
  s.layers = std::move(layers);
  s.m = 0;
  for (int x : s.layers) s.m += x;
  s.k = k;
  return s;
}

}  // namespace

TEST_CASE("closed-form delta_max hand values") {
  CHECK(delta_max(FamilyModel::make_cpt(2, 1.0 / std::exp(1.0))) ==
        doctest::Approx(4.0).epsilon(1e-12));
  CHECK(delta_max(FamilyModel::make_noisy_or(0.5)) ==
        doctest::Approx(0.0));
  CHECK(delta_max(FamilyModel::make_logistic(1.0)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // mu_max = 1, sigma = 1, w_max = 1/sqrt(2): 1 + 2 * (1/2 + 1) = 4.
  CHECK(delta_max(FamilyModel::make_gaussian(0, 1, 1, 1)) ==
        doctest::Approx(4.0).epsilon(1e-12));
  FamilyModel sym = FamilyModel::make_gaussian(0, 1, 1, 1);
  sym.w_max_override = 1.0;
  CHECK(delta_max(sym) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("threshold hand values") {
  const BoundReport small = threshold(restricted(3), kLn2);
  CHECK(small.threshold_L == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(small.vacuous);

  const BoundReport mid = threshold(restricted(13), kLn2);
  CHECK(mid.threshold_L == doctest::Approx(5.0 - 1.0 / 13.0).epsilon(1e-12));
  CHECK_FALSE(mid.vacuous);

  const BoundReport lay = threshold(layered({1, 4}), 1.0);
  CHECK(lay.threshold_L == doctest::Approx(kLn2).epsilon(1e-12));
}

TEST_CASE("threshold domain errors") {
  CHECK_THROWS_AS(threshold(restricted(4), 0.0), DomainError);
  CHECK_THROWS_AS(threshold(restricted(4), FamilyModel::make_noisy_or(0.5)),
                  DomainError);
  CHECK_THROWS_AS(threshold(restricted(4, 1), 1.0), DomainError);
  CHECK_THROWS_AS(threshold(layered({3}), 1.0), DomainError);
}

TEST_CASE("threshold monotonicity") {
  double prev = threshold(restricted(4), 1.0).threshold_L;
  for (int m = 5; m <= 50; ++m) {
    const double cur = threshold(restricted(m), 1.0).threshold_L;
    CHECK(cur > prev);
    prev = cur;
  }
  double prev_d = threshold(restricted(10), 0.1).threshold_L;
  for (double d = 0.2; d <= 2.01; d += 0.1) {
    const double cur = threshold(restricted(10), d).threshold_L;
    CHECK(cur < prev_d);
    prev_d = cur;
  }
}

TEST_CASE("Fano rearrangement consistency") {
  // Sparse and layered forms are algebraically
  // (log_size_lb / 2 - ln 2) / (m_eff * Delta).
  for (const auto& spec :
       {restricted(8, 3), restricted(12, 2), layered({2, 3, 1}),
        layered({1, 4})}) {
    const double delta = 0.7;
    const BoundReport rep = threshold(spec, delta);
    const int m_eff =
        spec.layered() ? spec.m - spec.layers.back() : spec.m;
    const double rebuilt =
        (rep.log_size_lb / 2.0 - kLn2) / (m_eff * delta);
    if (spec.kind == EnsembleKind::layered_sparse ||
        spec.kind == EnsembleKind::restricted_sparse ||
        spec.kind == EnsembleKind::layered_all) {
      CHECK(rep.threshold_L == doctest::Approx(rebuilt).epsilon(1e-9));
    }
  }
  // The unrestricted form as printed is exactly twice the rearrangement.
  const BoundReport rep = threshold(restricted(20), 0.7);
  const double rebuilt = (rep.log_size_lb / 2.0 - kLn2) / (20 * 0.7);
  CHECK(rep.threshold_L == doctest::Approx(2.0 * rebuilt).epsilon(1e-9));
}

TEST_CASE("corollary form and remainder") {
  // Non-sparse corollary coincides with the restricted-ensemble formula.
  for (int m : {5, 13, 40}) {
    CHECK(threshold_corollary(m, std::nullopt, 0.9).threshold_L ==
          doctest::Approx(threshold(restricted(m), 0.9).threshold_L)
              .epsilon(1e-12));
  }

  const int m = 100;
  const int k = 2;
  const double R = remainder_R(m, k);
  const double expect_r =
      (2.0 / 100.0) * (98.0 + 2.0 * std::log(98.0) + std::log(2.0) +
                       96.0 * std::log(2.0)) +
      kLn2 / 100.0;
  CHECK(R == doctest::Approx(expect_r).epsilon(1e-12));
  const BoundReport rep = threshold_corollary(m, k, 1.0);
  REQUIRE(rep.remainder_R.has_value());
  CHECK(*rep.remainder_R == doctest::Approx(R));
  const double expect_l =
      0.5 *
      (2.0 * std::log(98.0) + 2.0 * (2.0 - 3.0) * kLn2 / (2.0 * 100.0) - R);
  CHECK(rep.threshold_L == doctest::Approx(expect_l).epsilon(1e-12));

  CHECK_THROWS_AS(threshold_corollary(100, 0, 1.0), DomainError);
  CHECK_THROWS_AS(threshold_corollary(2, 1, 1.0), DomainError);
  CHECK_THROWS_AS(remainder_R(2, 1), DomainError);
}

TEST_CASE("table1 shape and input checking") {
  const std::vector<FamilyModel> fams = {
      FamilyModel::make_cpt(2, 0.1), FamilyModel::make_gaussian(0, 1, 1, 1),
      FamilyModel::make_noisy_or(0.25), FamilyModel::make_logistic(1.0)};
  const auto cells = table1(10, 2, fams);
  CHECK(cells.size() == 8);
  for (const auto& c : cells) CHECK(c.value > 0);

  std::vector<FamilyModel> dup = fams;
  dup[1] = FamilyModel::make_cpt(3, 0.1);
  CHECK_THROWS_AS(table1(10, 2, dup), UsageError);
  std::vector<FamilyModel> degenerate = fams;
  degenerate[2] = FamilyModel::make_noisy_or(0.5);
  CHECK_THROWS_AS(table1(10, 2, degenerate), DomainError);
  CHECK_THROWS_AS(table1(2, 1, fams), DomainError);
}

TEST_CASE("closed forms dominate realized expected divergences") {
  // Assumption-1 style check: the per-family constant is never exceeded by
  // the exact E[Delta(eta_i, eta_0)] of materialized ensembles. The noisy-OR
  // constant is a valid bound only for theta >= 1/2 under the
  // failure-odds parameterization; tested in its valid regime.
  const std::vector<FamilyModel> fams = {
      FamilyModel::make_cpt(2, 0.2), FamilyModel::make_cpt(3, 0.05),
      FamilyModel::make_gaussian(-1, 1, 0.8, 1.2),
      FamilyModel::make_noisy_or(0.6), FamilyModel::make_noisy_or(0.75),
      FamilyModel::make_logistic(1.5)};
  for (const auto& fam : fams) {
    const double closed = delta_max(fam);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      for (const auto& spec : {restricted(4), layered({2, 2, 1})}) {
        const double emp = empirical_delta_max(spec, ParamMap{fam, seed});
        CHECK(emp <= closed + 1e-9);
      }
    }
  }
}
