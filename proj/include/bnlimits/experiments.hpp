#ifndef BNLIMITS_EXPERIMENTS_HPP
#define BNLIMITS_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bnlimits/ensembles.hpp"
#include "bnlimits/expfam.hpp"

namespace bnl {

enum class DecoderKind { oracle_bayes, max_likelihood, bic };

DecoderKind decoder_from_string(const std::string& s);
std::string to_string(DecoderKind d);

struct ExperimentConfig {
  EnsembleSpec ensemble;
  FamilyModel family;
  DecoderKind decoder = DecoderKind::oracle_bayes;
  std::uint64_t param_seed = 1;
  std::uint64_t data_seed = 2;
  std::vector<int> n_grid;  // explicit sample sizes for run_error_curve
  int trials = 400;
};

void validate(const ExperimentConfig& cfg);

struct ErrorPoint {
  int n = 0;
  int trials = 0;
  int failures = 0;
  double error_rate = 0.0;
  double std_error = 0.0;  // sqrt(p (1 - p) / trials)
  double ci_low = 0.0;     // Wilson score interval, z = 1.96
  double ci_high = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ErrorPoint> points;
  double threshold_L = 0.0;
  double delta_max_used = 0.0;
  std::string delta_mode;  // "closed_form" or "empirical"
  std::string note;
};

std::pair<double, double> wilson_ci(int failures, int trials);

// Best-scoring ensemble member for the dataset; ties break toward the
// lowest canonical index. max_likelihood / bic support cpt and gaussian
// families only.
Dag decode(DecoderKind d, const Dataset& data, const EnsembleSpec& spec,
           const ParamMap& pm);

// Structure-recovery error rates over cfg.n_grid: a trial fails when the
// decoded structure is not Markov-equivalent to the sampled truth.
ExperimentResult run_error_curve(const ExperimentConfig& cfg);

struct ThresholdReport {
  bool skipped = false;
  bool passed = false;
  std::string diagnostic;
  double threshold_L = 0.0;
  double delta_max_used = 0.0;
  double theta_min_used = 0.0;  // cpt only, after any adaptation
  ExperimentResult result;
};

// Checks the high-error regime below the sample threshold: the threshold is
// evaluated at the instance-level empirical Delta_max of the realized
// parameter map; cpt models with a sub-unit threshold have theta_min walked
// toward the uniform table until the threshold admits at least one sample.
// Passes when error_rate + 2 * std_error >= 1/2 at every n <= floor(L).
ThresholdReport verify_threshold(const ExperimentConfig& cfg);

// Deterministic serialization (schema 1); the timestamp is the only
// run-dependent field.
std::string to_json(const ExperimentResult& r, bool with_timestamp);
std::string to_csv(const ExperimentResult& r);

// Writes json_path and a CSV companion with the extension swapped to .csv.
void persist(const ExperimentResult& r, const std::string& json_path);
ExperimentResult load_result(const std::string& json_path);

}  // namespace bnl

#endif
