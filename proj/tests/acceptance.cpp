// Acceptance harness: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] is the path to the command-line binary (used by the
// determinism criterion).

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bnlimits/bounds.hpp"
#include "bnlimits/ensembles.hpp"
#include "bnlimits/expfam.hpp"
#include "bnlimits/experiments.hpp"
#include "bnlimits/infotheory.hpp"
#include "bnlimits/rng.hpp"

using namespace bnl;

namespace {

std::string g_cli;

EnsembleSpec restricted(int m) {
  EnsembleSpec s;
  s.kind = EnsembleKind::restricted_all;
  s.m = m;
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

struct Criterion {
  int id;
  std::string name;
  std::function<bool(std::string&)> run;
};

bool check_runtime(double seconds, double limit, std::string& why) {
  if (seconds > limit) {
    why = "runtime " + std::to_string(seconds) + "s exceeds " +
          std::to_string(limit) + "s";
    return false;
  }
  return true;
}

// 1. Counting oracle agreement for m in 0..5.
bool crit_counting(std::string& why) {
  const auto start = std::chrono::steady_clock::now();
  const long expected[] = {1, 1, 1, 4, 59, -1};
  for (int m = 0; m <= 5; ++m) {
    const BigCount rec = count_essential_recurrence(m);
    const BigCount brute = count_essential_brute(m);
    if (rec != brute) {
      why = "recurrence " + rec.str() + " != brute " + brute.str() +
            " at m=" + std::to_string(m);
      return false;
    }
    if (expected[m] >= 0 && brute != expected[m]) {
      why = "brute count at m=" + std::to_string(m) + " is " + brute.str();
      return false;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return check_runtime(secs, 30.0, why);
}

// 2. Lemma 1/2 sandwich bounds.
bool crit_sandwich(std::string& why) {
  for (int m = 1; m <= 5; ++m) {
    const auto [lo, hi] = count_bounds_restricted(m);
    const BigCount c = count_essential_brute(m);
    if (!(lo <= c && c <= hi)) {
      why = "restricted sandwich violated at m=" + std::to_string(m);
      return false;
    }
  }
  const std::pair<int, int> sparse_cases[] = {{4, 2}, {5, 2}, {5, 3}};
  for (auto [m, k] : sparse_cases) {
    const auto [lo, hi] = count_bounds_sparse(m, k);
    const BigCount c = count_essential_brute(m, k);
    if (!(lo <= c && c <= hi)) {
      why = "sparse sandwich violated at (m,k)=(" + std::to_string(m) + "," +
            std::to_string(k) + ")";
      return false;
    }
  }
  return true;
}

// 3. Layered product counts versus brute enumeration.
bool crit_layered(std::string& why) {
  const std::vector<EnsembleSpec> specs = {
      layered({1, 1}),       layered({2, 1}),    layered({1, 2}),
      layered({2, 2}),       layered({3, 2}),    layered({2, 3}),
      layered({1, 2, 1}),    layered({2, 2, 1}), layered({2, 3}, 2),
      layered({1, 3, 1}, 1),
  };
  for (const auto& spec : specs) {
    BigCount brute = 0;
    enumerate_dags(spec.m, std::nullopt, [&](const Dag& g) {
      if (in_ensemble(spec, g)) ++brute;
    });
    const BigCount product = count_layered(spec);
    if (product != brute) {
      why = "layered count " + product.str() + " != brute " + brute.str();
      return false;
    }
    if (product > 100000) {
      why = "spec exceeds the 1e5 size limit";
      return false;
    }
  }
  return true;
}

// 4. KL <= Delta over 1e5 random pairs per family.
bool crit_domination(std::string& why) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<FamilyModel> fams;
  for (int v = 2; v <= 5; ++v) fams.push_back(FamilyModel::make_cpt(v, 0.05));
  fams.push_back(FamilyModel::make_noisy_or(0.3));   // Bernoulli form
  fams.push_back(FamilyModel::make_logistic(2.0));   // Bernoulli form
  fams.push_back(FamilyModel::make_gaussian(0, 1, 1, 1));
  for (std::size_t i = 0; i < fams.size(); ++i) {
    const KlReport rep =
        verify_kl_domination(fams[i], 100000, 900 + std::uint64_t(i));
    if (rep.violations != 0) {
      why = std::to_string(rep.violations) + " violations in family " +
            std::to_string(i);
      return false;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return check_runtime(secs, 60.0, why);
}

// 5. Gaussian covariance induction on random ball-constrained networks.
bool crit_gaussian_induction(std::string& why) {
  const ParamMap pm{FamilyModel::make_gaussian(-1, 2, 0.7, 1.3), 55};
  auto rng = make_rng(314);
  for (int t = 0; t < 1000; ++t) {
    const int m = 2 + int(rng() % 7);  // 2..8
    Dag g = Dag::empty(m);
    for (int j = 1; j < m; ++j) {
      for (int i = 0; i < j; ++i) {
        if (uniform01(rng) < 0.4) g.parents[std::size_t(j)] |= 1ULL << i;
      }
    }
    const BayesNet bn = materialize(pm, g);
    const double s2 = bn.nodes[0].sigma * bn.nodes[0].sigma;
    const GaussianCov cov = gaussian_joint_covariance(bn);
    Eigen::MatrixXd sigma(m, m);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        sigma(r, c) = cov.sigma[std::size_t(r) * std::size_t(m) +
                                std::size_t(c)];
      }
    }
    for (int i = 1; i <= m; ++i) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          sigma.topLeftCorner(i, i));
      const double lmax = es.eigenvalues().maxCoeff();
      if (lmax > i * s2 + 1e-9) {
        why = "lambda_max " + std::to_string(lmax) + " > i sigma^2 at i=" +
              std::to_string(i);
        return false;
      }
      if (cov.var_mu[std::size_t(i - 1)] > s2 / 2.0 + 1e-9) {
        why = "Var(mu_i) exceeds sigma^2/2 at i=" + std::to_string(i);
        return false;
      }
    }
  }
  return true;
}

// 6. MI chain mi_exact <= lemma bound <= n m Delta_max.
bool crit_mi_chain(std::string& why) {
  auto check_instance = [&](const EnsembleSpec& spec, const ParamMap& pm,
                            int n) {
    const MiReport rep = mi_exact(spec, pm, n);
    if (rep.exact_or_estimate > rep.upper_bound_lemma7 + 1e-9) return false;
    if (rep.upper_bound_lemma7 > rep.upper_bound_assumption + 1e-9) {
      return false;
    }
    return true;
  };
  const ParamMap pm{FamilyModel::make_cpt(2, 0.1), 8};
  for (int n = 1; n <= 3; ++n) {
    if (!check_instance(restricted(3), pm, n)) {
      why = "chain violated on the m=3 instance at n=" + std::to_string(n);
      return false;
    }
  }
  const std::vector<std::pair<EnsembleSpec, int>> layered_cases = {
      {layered({1, 2}), 2}, {layered({2, 2}), 1}, {layered({1, 2, 1}), 1}};
  for (const auto& [spec, n] : layered_cases) {
    if (!check_instance(spec, pm, n)) {
      why = "chain violated on a layered instance";
      return false;
    }
  }
  return true;
}

// 7. Fano-extension inequality on 1e3 random models.
bool crit_fano(std::string& why) {
  const FanoReport rep = verify_fano_extension(1000, 4242);
  if (rep.violations != 0) {
    why = std::to_string(rep.violations) + " violations, min margin " +
          std::to_string(rep.min_margin);
    return false;
  }
  return true;
}

// 8. Fano threshold experiment on the m=4 CPT ensemble.
bool crit_threshold_experiment(std::string& why) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.ensemble = restricted(4);
  cfg.family = FamilyModel::make_cpt(2, 0.45);
  cfg.decoder = DecoderKind::oracle_bayes;
  cfg.param_seed = 11;
  cfg.data_seed = 12;
  cfg.trials = 400;
  const ThresholdReport rep = verify_threshold(cfg);
  if (rep.skipped) {
    why = "unexpected skip: " + rep.diagnostic;
    return false;
  }
  if (!rep.passed) {
    why = rep.diagnostic;
    return false;
  }
  if (ensemble_members(cfg.ensemble)->size() != 59) {
    why = "ensemble size is not 59";
    return false;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return check_runtime(secs, 600.0, why);
}

// 9. Table 1 regeneration and scaling checks.
bool crit_table1(std::string& why) {
  auto cell = [](int m, int k, const FamilyModel& target,
                 bool sparse) -> double {
    std::vector<FamilyModel> fams = {
        FamilyModel::make_cpt(2, 0.1), FamilyModel::make_gaussian(0, 1, 1, 1),
        FamilyModel::make_noisy_or(0.3), FamilyModel::make_logistic(1.0)};
    for (auto& f : fams) {
      if (f.kind == target.kind) f = target;
    }
    for (const auto& c : table1(m, k, fams)) {
      if (c.family.kind == target.kind && c.sparse == sparse) return c.value;
    }
    return -1.0;
  };

  if (table1(10, 2,
             {FamilyModel::make_cpt(2, 0.1),
              FamilyModel::make_gaussian(0, 1, 1, 1),
              FamilyModel::make_noisy_or(0.3),
              FamilyModel::make_logistic(1.0)})
          .size() != 8) {
    why = "grid does not have 8 cells";
    return false;
  }

  const FamilyModel cpt = FamilyModel::make_cpt(2, 0.1);
  for (int m : {50, 64, 100}) {
    const double ratio = cell(2 * m, 2, cpt, false) / cell(m, 2, cpt, false);
    if (std::abs(ratio - 2.0) > 0.1) {
      why = "cpt doubling ratio " + std::to_string(ratio) + " at m=" +
            std::to_string(m);
      return false;
    }
  }

  double prev = 0;
  for (double theta : {0.45, 0.49, 0.499, 0.4999}) {
    const double v =
        cell(20, 2, FamilyModel::make_noisy_or(theta), false);
    if (v <= prev) {
      why = "noisy-or cell not diverging toward theta = 1/2";
      return false;
    }
    prev = v;
  }
  if (prev < 10.0 * cell(20, 2, FamilyModel::make_noisy_or(0.45), false)) {
    why = "noisy-or divergence too slow";
    return false;
  }

  // Logistic sparse cell scales as k ln m / w1.
  const double base = cell(100, 2, FamilyModel::make_logistic(1.0), true);
  const double scale = base / (2.0 * std::log(100.0) / 1.0);
  for (int m : {100, 200}) {
    for (int k : {2, 4}) {
      for (double w1 : {1.0, 2.0}) {
        const double v = cell(m, k, FamilyModel::make_logistic(w1), true);
        const double model = scale * k * std::log(double(m)) / w1;
        if (std::abs(v / model - 1.0) > 0.10) {
          why = "logistic sparse ratio off by " +
                std::to_string(std::abs(v / model - 1.0));
          return false;
        }
      }
    }
  }
  return true;
}

std::string strip_timestamp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\"") != std::string::npos) continue;
    out << line << '\n';
  }
  return out.str();
}

// 10. Byte-identical CLI simulate output modulo the timestamp.
bool crit_determinism(std::string& why) {
  if (g_cli.empty()) {
    why = "CLI path not supplied";
    return false;
  }
  const std::string cfg_path = "acceptance_sim.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "ensemble = restricted\nm = 3\nfamily = cpt\nv = 2\n"
           "theta_min = 0.3\ndecoder = oracle_bayes\nparam_seed = 21\n"
           "data_seed = 22\nn_grid = 1,3,6\ntrials = 150\n";
  }
  const std::string outs[] = {"acceptance_sim_a.json", "acceptance_sim_b.json",
                              "acceptance_sim_c.json"};
  const std::string envs[] = {"", "OMP_NUM_THREADS=1 ", "OMP_NUM_THREADS=8 "};
  for (int i = 0; i < 3; ++i) {
    const std::string cmd = envs[i] + "\"" + g_cli + "\" simulate --config " +
                            cfg_path + " --out " + outs[i];
    if (std::system(cmd.c_str()) != 0) {
      why = "CLI invocation failed: " + cmd;
      return false;
    }
  }
  const std::string a = strip_timestamp(outs[0]);
  if (a.empty()) {
    why = "empty simulate output";
    return false;
  }
  for (int i = 1; i < 3; ++i) {
    if (strip_timestamp(outs[i]) != a) {
      why = "output differs between runs";
      return false;
    }
  }
  std::remove(cfg_path.c_str());
  for (const auto& f : outs) {
    std::remove(f.c_str());
    std::remove((f.substr(0, f.size() - 5) + ".csv").c_str());
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  const std::vector<Criterion> criteria = {
      {1, "counting oracle agreement", crit_counting},
      {2, "closed-form sandwich bounds", crit_sandwich},
      {3, "layered count exactness", crit_layered},
      {4, "KL dominated by Delta", crit_domination},
      {5, "gaussian covariance induction", crit_gaussian_induction},
      {6, "MI upper-bound chain", crit_mi_chain},
      {7, "Fano-extension inequality", crit_fano},
      {8, "high-error regime below the threshold", crit_threshold_experiment},
      {9, "summary grid regeneration and scaling", crit_table1},
      {10, "deterministic simulation output", crit_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    std::string why;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = c.run(why);
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fs", secs);
    std::cout << "[" << (c.id < 10 ? " " : "") << c.id << "] "
              << (ok ? "PASS" : "FAIL") << " " << c.name << " (" << buf << ")";
    if (!ok) {
      std::cout << " — " << why;
      ++failures;
    }
    std::cout << "\n";
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
