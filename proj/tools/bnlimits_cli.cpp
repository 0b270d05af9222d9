#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bnlimits/bounds.hpp"
#include "bnlimits/ensembles.hpp"
#include "bnlimits/errors.hpp"
#include "bnlimits/expfam.hpp"
#include "bnlimits/experiments.hpp"
#include "bnlimits/infotheory.hpp"
#include "bnlimits/rng.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace bnl;

const double kLn2 = std::log(2.0);

struct Flags {
  std::string ensemble = "restricted";
  int m = 0;
  int k = -1;
  std::vector<int> layers;

  std::string family = "cpt";
  int v = 2;
  double theta_min = 0.1;
  double mu_a = 0.0;
  double mu_b = 1.0;
  double sigma_min = 1.0;
  double sigma_max = 1.0;
  double theta = 0.25;
  double wmax1 = 1.0;
  double wmax_override = std::nan("");

  std::string method = "recurrence";
  std::uint64_t seed = 0;
  std::uint64_t param_seed = 1;
  int n = 1;
  int count = 1;
  int trials = 1000;
  int mc = 0;
  bool corollary = false;
  bool bits = false;
  std::string out;
  std::string config;
  std::string format = "json";
};

EnsembleSpec build_spec(const Flags& f) {
  EnsembleSpec spec;
  if (!f.layers.empty()) {
    spec.layers = f.layers;
    int total = 0;
    for (int x : f.layers) total += x;
    if (f.m > 0 && f.m != total) {
      throw UsageError("--m disagrees with the sum of --layers");
    }
    spec.m = total;
    spec.kind =
        f.k >= 0 ? EnsembleKind::layered_sparse : EnsembleKind::layered_all;
  } else {
    if (f.ensemble == "layered") {
      throw UsageError("layered ensembles require --layers");
    }
    if (f.ensemble != "restricted") {
      throw UsageError("--ensemble must be restricted or layered");
    }
    if (f.m <= 0) throw UsageError("--m is required");
    spec.m = f.m;
    spec.kind = f.k >= 0 ? EnsembleKind::restricted_sparse
                         : EnsembleKind::restricted_all;
  }
  if (f.k >= 0) spec.k = f.k;
  bnl::validate(spec);
  return spec;
}

FamilyModel build_family(const Flags& f, const std::string& kind) {
  FamilyModel fam;
  if (kind == "cpt") {
    fam = FamilyModel::make_cpt(f.v, f.theta_min);
  } else if (kind == "gaussian") {
    fam = FamilyModel::make_gaussian(f.mu_a, f.mu_b, f.sigma_min, f.sigma_max);
  } else if (kind == "noisy_or") {
    fam = FamilyModel::make_noisy_or(f.theta);
  } else if (kind == "logistic") {
    fam = FamilyModel::make_logistic(f.wmax1);
  } else {
    throw UsageError("--family must be cpt, gaussian, noisy_or, or logistic");
  }
  if (!std::isnan(f.wmax_override)) fam.w_max_override = f.wmax_override;
  return fam;
}

const char* kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::restricted_all: return "restricted_all";
    case EnsembleKind::restricted_sparse: return "restricted_sparse";
    case EnsembleKind::layered_all: return "layered_all";
    case EnsembleKind::layered_sparse: return "layered_sparse";
  }
  return "";
}

json spec_to_json(const EnsembleSpec& spec) {
  json e;
  e["kind"] = kind_name(spec.kind);
  e["m"] = spec.m;
  if (spec.k) e["k"] = *spec.k;
  if (!spec.layers.empty()) e["layers"] = spec.layers;
  return e;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream o(out);
  if (!o) throw UsageError("cannot open output path " + out);
  o << text;
}

int run_count(const Flags& f) {
  json j;
  j["m"] = f.m > 0 ? f.m : 0;
  if (!f.layers.empty()) {
    const EnsembleSpec spec = build_spec(f);
    j["ensemble"] = spec_to_json(spec);
    j["m"] = spec.m;
    j["count"] = count_layered(spec).str();
  } else if (f.method == "recurrence") {
    if (f.k >= 0) {
      throw UsageError(
          "count: the recurrence counts the unrestricted ensemble; use "
          "--method brute or bounds with --k");
    }
    j["method"] = "recurrence";
    j["count"] = count_essential_recurrence(f.m).str();
  } else if (f.method == "brute") {
    j["method"] = "brute";
    if (f.k >= 0) j["k"] = f.k;
    j["count"] =
        count_essential_brute(f.m, f.k >= 0 ? std::optional<int>(f.k)
                                            : std::nullopt)
            .str();
  } else if (f.method == "bounds") {
    j["method"] = "bounds";
    const auto [lo, hi] = f.k >= 0 ? count_bounds_sparse(f.m, f.k)
                                   : count_bounds_restricted(f.m);
    if (f.k >= 0) j["k"] = f.k;
    j["lower"] = lo.str();
    j["upper"] = hi.str();
  } else {
    throw UsageError("--method must be recurrence, brute, or bounds");
  }
  emit(j.dump(2) + "\n", f.out);
  return 0;
}

int run_bound(const Flags& f) {
  const FamilyModel fam = build_family(f, f.family);
  BoundReport rep;
  if (f.corollary) {
    if (f.m <= 0) throw UsageError("--m is required");
    rep = threshold_corollary(
        f.m, f.k >= 0 ? std::optional<int>(f.k) : std::nullopt,
        delta_max(fam));
  } else {
    rep = threshold(build_spec(f), fam);
  }
  const double conv = f.bits ? 1.0 / kLn2 : 1.0;
  json j;
  j["ensemble"] = spec_to_json(rep.ensemble);
  j["family"] = f.family;
  j["delta_max"] = rep.delta_max * conv;
  j["log_ensemble_size_lb"] = rep.log_size_lb * conv;
  j["threshold"] = rep.threshold_L;
  j["vacuous"] = rep.vacuous;
  if (rep.remainder_R) j["remainder_R"] = *rep.remainder_R;
  if (!rep.note.empty()) j["note"] = rep.note;
  j["units"] = f.bits ? "bits" : "nats";
  emit(j.dump(2) + "\n", f.out);
  return 0;
}

int run_table1(const Flags& f) {
  if (f.m <= 0) throw UsageError("--m is required");
  if (f.k < 1) throw UsageError("--k is required");
  std::vector<FamilyModel> models = {
      build_family(f, "cpt"), build_family(f, "gaussian"),
      build_family(f, "noisy_or"), build_family(f, "logistic")};
  const auto cells = table1(f.m, f.k, models);
  const char* names[] = {"cpt", "gaussian", "noisy_or", "logistic"};
  if (f.format == "csv") {
    std::ostringstream os;
    os << "family,sparse,delta_max,samples\n";
    for (const auto& c : cells) {
      os << names[static_cast<int>(c.family.kind)] << ','
         << (c.sparse ? 1 : 0) << ',' << c.delta_max << ',' << c.value << '\n';
    }
    emit(os.str(), f.out);
    return 0;
  }
  json arr = json::array();
  for (const auto& c : cells) {
    json cj;
    cj["family"] = names[static_cast<int>(c.family.kind)];
    cj["sparse"] = c.sparse;
    cj["delta_max"] = c.delta_max;
    cj["samples"] = c.value;
    arr.push_back(cj);
  }
  json j;
  j["m"] = f.m;
  j["k"] = f.k;
  j["cells"] = arr;
  emit(j.dump(2) + "\n", f.out);
  return 0;
}

int run_sample(const Flags& f) {
  const EnsembleSpec spec = build_spec(f);
  if (f.count < 1) throw UsageError("--count must be >= 1");
  json arr = json::array();
  for (int i = 0; i < f.count; ++i) {
    const Dag g =
        sample_uniform(spec, derive_seed(f.seed, 0x5a3du,
                                         static_cast<std::uint64_t>(i)));
    json gj;
    gj["m"] = g.m;
    json edges = json::array();
    for (int to = 0; to < g.m; ++to) {
      for (int from : g.parent_list(to)) {
        edges.push_back(json::array({from, to}));
      }
    }
    gj["edges"] = edges;
    arr.push_back(gj);
  }
  json j;
  j["ensemble"] = spec_to_json(spec);
  j["seed"] = f.seed;
  j["graphs"] = arr;
  emit(j.dump(2) + "\n", f.out);
  return 0;
}

int run_mi(const Flags& f) {
  const EnsembleSpec spec = build_spec(f);
  const FamilyModel fam = build_family(f, f.family);
  const ParamMap pm{fam, f.param_seed};
  const MiReport rep = f.mc > 0 ? mi_monte_carlo(spec, pm, f.n, f.mc, f.seed)
                                : mi_exact(spec, pm, f.n);
  const double conv = f.bits ? 1.0 / kLn2 : 1.0;
  json j;
  j["ensemble"] = spec_to_json(spec);
  j["family"] = f.family;
  j["n"] = f.n;
  j["method"] = f.mc > 0 ? "monte_carlo" : "exact";
  j["value"] = rep.exact_or_estimate * conv;
  j["std_error"] = rep.std_error * conv;
  j["se_unreliable"] = rep.se_unreliable;
  j["upper_bound_lemma7"] = rep.upper_bound_lemma7 * conv;
  j["upper_bound_assumption"] = rep.upper_bound_assumption * conv;
  j["units"] = f.bits ? "bits" : "nats";
  emit(j.dump(2) + "\n", f.out);
  return 0;
}

int run_verify_kl(const Flags& f) {
  const FamilyModel fam = build_family(f, f.family);
  const KlReport rep = verify_kl_domination(fam, f.trials, f.seed);
  json j;
  j["family"] = f.family;
  j["trials"] = rep.trials;
  j["violations"] = rep.violations;
  j["max_kl"] = rep.max_kl;
  j["max_excess"] = rep.max_excess;
  j["result"] = rep.violations == 0 ? "PASS" : "FAIL";
  emit(j.dump(2) + "\n", f.out);
  return rep.violations == 0 ? 0 : 4;
}

int run_verify_fano(const Flags& f) {
  const FanoReport rep = verify_fano_extension(f.trials, f.seed);
  json j;
  j["trials"] = rep.trials;
  j["violations"] = rep.violations;
  j["min_margin"] = rep.min_margin;
  j["result"] = rep.violations == 0 ? "PASS" : "FAIL";
  emit(j.dump(2) + "\n", f.out);
  return rep.violations == 0 ? 0 : 4;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

// Flat key=value file; '#' starts a comment.
ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  Flags f;
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) +
                       ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "ensemble") f.ensemble = val;
    else if (key == "m") f.m = std::stoi(val);
    else if (key == "k") f.k = std::stoi(val);
    else if (key == "layers") f.layers = parse_int_list(val);
    else if (key == "family") f.family = val;
    else if (key == "v") f.v = std::stoi(val);
    else if (key == "theta_min") f.theta_min = std::stod(val);
    else if (key == "mu_a") f.mu_a = std::stod(val);
    else if (key == "mu_b") f.mu_b = std::stod(val);
    else if (key == "sigma_min") f.sigma_min = std::stod(val);
    else if (key == "sigma_max") f.sigma_max = std::stod(val);
    else if (key == "theta") f.theta = std::stod(val);
    else if (key == "w_max_1") f.wmax1 = std::stod(val);
    else if (key == "decoder") cfg.decoder = decoder_from_string(val);
    else if (key == "param_seed") cfg.param_seed = std::stoull(val);
    else if (key == "data_seed") cfg.data_seed = std::stoull(val);
    else if (key == "n_grid") cfg.n_grid = parse_int_list(val);
    else if (key == "trials") cfg.trials = std::stoi(val);
    else {
      throw UsageError("config line " + std::to_string(lineno) +
                       ": unknown key " + key);
    }
  }
  cfg.ensemble = build_spec(f);
  cfg.family = build_family(f, f.family);
  return cfg;
}

int run_simulate(const Flags& f) {
  ExperimentConfig cfg = config_from_file(f.config);
  if (cfg.n_grid.empty()) {
    throw UsageError("simulate: the config must set n_grid");
  }
  const ExperimentResult res = run_error_curve(cfg);
  if (!f.out.empty()) {
    persist(res, f.out);
  } else {
    std::cout << to_json(res, true);
  }
  return 0;
}

int run_verify_threshold(const Flags& f) {
  const ExperimentConfig cfg = config_from_file(f.config);
  const ThresholdReport rep = verify_threshold(cfg);
  json j;
  j["skipped"] = rep.skipped;
  j["passed"] = rep.passed;
  j["diagnostic"] = rep.diagnostic;
  j["threshold"] = rep.threshold_L;
  j["delta_max"] = rep.delta_max_used;
  j["theta_min_used"] = rep.theta_min_used;
  j["result"] = rep.skipped ? "SKIPPED" : (rep.passed ? "PASS" : "FAIL");
  if (!rep.skipped) {
    j["experiment"] = json::parse(to_json(rep.result, false));
  }
  emit(j.dump(2) + "\n", f.out);
  return rep.skipped || rep.passed ? 0 : 4;
}

void add_ensemble_opts(CLI::App* cmd, Flags& f) {
  cmd->add_option("--ensemble", f.ensemble, "restricted or layered");
  cmd->add_option("--m", f.m, "number of nodes");
  cmd->add_option("--k", f.k, "in-degree cap");
  cmd->add_option("--layers", f.layers, "layer sizes, comma separated")
      ->delimiter(',');
}

void add_family_opts(CLI::App* cmd, Flags& f) {
  cmd->add_option("--family", f.family,
                  "cpt, gaussian, noisy_or, or logistic");
  cmd->add_option("--v", f.v, "cpt support size");
  cmd->add_option("--theta-min", f.theta_min, "cpt minimum cell probability");
  cmd->add_option("--mu-a", f.mu_a, "gaussian root-mean range start");
  cmd->add_option("--mu-b", f.mu_b, "gaussian root-mean range end");
  cmd->add_option("--sigma-min", f.sigma_min, "gaussian minimum sigma");
  cmd->add_option("--sigma-max", f.sigma_max, "gaussian maximum sigma");
  cmd->add_option("--theta", f.theta, "noisy-or failure probability");
  cmd->add_option("--wmax1", f.wmax1, "logistic max l1 weight norm");
  cmd->add_option("--wmax-override", f.wmax_override,
                  "override the gaussian w_max closed-form constant");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sample-complexity lower bounds for Bayesian-network "
               "structure learning"};
  app.require_subcommand(1);
  Flags f;

  auto* count_cmd = app.add_subcommand("count", "ensemble sizes");
  add_ensemble_opts(count_cmd, f);
  count_cmd->add_option("--method", f.method, "recurrence, brute, or bounds");
  count_cmd->add_option("--out", f.out, "output path");

  auto* bound_cmd = app.add_subcommand("bound", "sample-count thresholds");
  add_ensemble_opts(bound_cmd, f);
  add_family_opts(bound_cmd, f);
  bound_cmd->add_flag("--corollary", f.corollary,
                      "fundamental-limit form with remainder");
  bound_cmd->add_flag("--bits", f.bits, "report logarithmic values in bits");
  bound_cmd->add_option("--out", f.out, "output path");

  auto* table_cmd = app.add_subcommand("table1", "4x2 summary grid");
  table_cmd->add_option("--m", f.m, "number of nodes")->required();
  table_cmd->add_option("--k", f.k, "in-degree cap")->required();
  add_family_opts(table_cmd, f);
  table_cmd->add_option("--format", f.format, "json or csv");
  table_cmd->add_option("--out", f.out, "output path");

  auto* sample_cmd = app.add_subcommand("sample", "uniform ensemble draws");
  add_ensemble_opts(sample_cmd, f);
  sample_cmd->add_option("--seed", f.seed, "rng seed");
  sample_cmd->add_option("--count", f.count, "number of draws");
  sample_cmd->add_option("--out", f.out, "output path");

  auto* mi_cmd = app.add_subcommand("mi", "mutual-information reports");
  add_ensemble_opts(mi_cmd, f);
  add_family_opts(mi_cmd, f);
  mi_cmd->add_option("--n", f.n, "samples per dataset")->required();
  mi_cmd->add_flag("--exact", "exact enumeration (default)");
  mi_cmd->add_option("--mc", f.mc, "Monte Carlo trials");
  mi_cmd->add_option("--param-seed", f.param_seed, "parameter-map seed");
  mi_cmd->add_option("--seed", f.seed, "sampling seed");
  mi_cmd->add_flag("--bits", f.bits, "report values in bits");
  mi_cmd->add_option("--out", f.out, "output path");

  auto* vkl_cmd = app.add_subcommand("verify-kl", "KL <= Delta property run");
  add_family_opts(vkl_cmd, f);
  vkl_cmd->add_option("--trials", f.trials, "random pairs");
  vkl_cmd->add_option("--seed", f.seed, "rng seed");
  vkl_cmd->add_option("--out", f.out, "output path");

  auto* vf_cmd = app.add_subcommand("verify-fano", "Fano property run");
  vf_cmd->add_option("--trials", f.trials, "random models");
  vf_cmd->add_option("--seed", f.seed, "rng seed");
  vf_cmd->add_option("--out", f.out, "output path");

  auto* sim_cmd = app.add_subcommand("simulate", "decoder error curves");
  sim_cmd->add_option("--config", f.config, "key=value config file")
      ->required();
  sim_cmd->add_option("--out", f.out, "JSON path (CSV companion alongside)");

  auto* vt_cmd =
      app.add_subcommand("verify-threshold", "high-error regime check");
  vt_cmd->add_option("--config", f.config, "key=value config file")
      ->required();
  vt_cmd->add_option("--out", f.out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (count_cmd->parsed()) return run_count(f);
    if (bound_cmd->parsed()) return run_bound(f);
    if (table_cmd->parsed()) return run_table1(f);
    if (sample_cmd->parsed()) return run_sample(f);
    if (mi_cmd->parsed()) return run_mi(f);
    if (vkl_cmd->parsed()) return run_verify_kl(f);
    if (vf_cmd->parsed()) return run_verify_fano(f);
    if (sim_cmd->parsed()) return run_simulate(f);
    if (vt_cmd->parsed()) return run_verify_threshold(f);
  } catch (const CapabilityError& e) {
    std::cerr << "capability limit: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
