#include "bnlimits/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "bnlimits/bounds.hpp"
#include "bnlimits/errors.hpp"
#include "bnlimits/infotheory.hpp"
#include "bnlimits/rng.hpp"

namespace bnl {

namespace {

using json = nlohmann::ordered_json;

constexpr int kMaxGridN = 64;  // runtime guard on the verification grid

std::size_t uniform_index(std::mt19937_64& rng, std::size_t c) {
  const std::uint64_t lim =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % static_cast<std::uint64_t>(c);
  std::uint64_t x = rng();
  while (x >= lim) x = rng();
  return static_cast<std::size_t>(x % static_cast<std::uint64_t>(c));
}

bool ml_supported(const FamilyModel& fam) {
  return fam.kind == FamilyKind::cpt || fam.kind == FamilyKind::gaussian;
}

// Least squares through the origin on the parent columns, with a tiny ridge
// for degenerate designs. Returns the residual sum of squares.
double ols_rss(const Dataset& data, int node, const std::vector<int>& plist) {
  const std::size_t d = plist.size();
  std::vector<double> a(d * d, 0.0);
  std::vector<double> b(d, 0.0);
  for (int r = 0; r < data.n; ++r) {
    const double y = data.at(r, node);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = data.at(r, plist[i]);
      b[i] += xi * y;
      for (std::size_t j = 0; j <= i; ++j) {
        a[i * d + j] += xi * data.at(r, plist[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    a[i * d + i] += 1e-10;
    for (std::size_t j = i + 1; j < d; ++j) a[i * d + j] = a[j * d + i];
  }
  // Gaussian elimination with partial pivoting.
  std::vector<double> w = b;
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col])) piv = r;
    }
    if (piv != col) {
      for (std::size_t j = 0; j < d; ++j) std::swap(a[col * d + j], a[piv * d + j]);
      std::swap(w[col], w[piv]);
    }
    const double p = a[col * d + col];
    for (std::size_t r = col + 1; r < d; ++r) {
      const double f = a[r * d + col] / p;
      for (std::size_t j = col; j < d; ++j) a[r * d + j] -= f * a[col * d + j];
      w[r] -= f * w[col];
    }
  }
  for (std::size_t col = d; col-- > 0;) {
    for (std::size_t j = col + 1; j < d; ++j) w[col] -= a[col * d + j] * w[j];
    w[col] /= a[col * d + col];
  }
  double rss = 0;
  for (int r = 0; r < data.n; ++r) {
    double pred = 0;
    for (std::size_t i = 0; i < d; ++i) pred += w[i] * data.at(r, plist[i]);
    const double e = data.at(r, node) - pred;
    rss += e * e;
  }
  return rss;
}

// Profile log-likelihood of the dataset under graph g, maximized over the
// family's free parameters, plus the free-parameter count for BIC.
std::pair<double, double> ml_score(const FamilyModel& fam, const Dag& g,
                                   const Dataset& data) {
  const int m = g.m;
  if (fam.kind == FamilyKind::cpt) {
    const int v = fam.v;
    double ll = 0;
    double params = 0;
    for (int i = 0; i < m; ++i) {
      const auto plist = g.parent_list(i);
      std::size_t configs = 1;
      for (std::size_t j = 0; j < plist.size(); ++j) {
        configs *= static_cast<std::size_t>(v);
      }
      params += static_cast<double>(v - 1) * static_cast<double>(configs);
      std::vector<int> counts(configs * static_cast<std::size_t>(v), 0);
      std::vector<int> totals(configs, 0);
      for (int r = 0; r < data.n; ++r) {
        std::size_t key = 0;
        std::size_t stride = 1;
        for (int p : plist) {
          key += static_cast<std::size_t>(data.at(r, p)) * stride;
          stride *= static_cast<std::size_t>(v);
        }
        ++counts[key * static_cast<std::size_t>(v) +
                 static_cast<std::size_t>(data.at(r, i))];
        ++totals[key];
      }
      for (std::size_t cfg = 0; cfg < configs; ++cfg) {
        if (totals[cfg] == 0) continue;
        for (int val = 0; val < v; ++val) {
          const int c = counts[cfg * static_cast<std::size_t>(v) +
                               static_cast<std::size_t>(val)];
          if (c > 0) {
            ll += c * std::log(static_cast<double>(c) /
                               static_cast<double>(totals[cfg]));
          }
        }
      }
    }
    return {ll, params};
  }
  // Gaussian: roots share one mean, every conditional shares one variance;
  // both are profiled out, weights fit per non-root node.
  double rss = 0;
  double params = 2;  // shared mean and sigma
  double root_sum = 0;
  int root_n = 0;
  std::vector<int> roots;
  for (int i = 0; i < m; ++i) {
    const auto plist = g.parent_list(i);
    if (plist.empty()) {
      roots.push_back(i);
      for (int r = 0; r < data.n; ++r) root_sum += data.at(r, i);
      root_n += data.n;
    } else {
      params += static_cast<double>(plist.size());
      rss += ols_rss(data, i, plist);
    }
  }
  const double mu_hat = root_n > 0 ? root_sum / root_n : 0.0;
  for (int i : roots) {
    for (int r = 0; r < data.n; ++r) {
      const double e = data.at(r, i) - mu_hat;
      rss += e * e;
    }
  }
  const double cells = static_cast<double>(data.n) * m;
  if (cells == 0) return {0.0, params};
  const double var_hat = std::max(rss / cells, 1e-12);
  const double ll =
      -0.5 * cells * (std::log(2.0 * std::numbers::pi * var_hat) + 1.0);
  return {ll, params};
}

struct DecodeContext {
  std::shared_ptr<const std::vector<Dag>> members;
  std::vector<BayesNet> nets;  // oracle only
};

DecodeContext make_context(DecoderKind d, const EnsembleSpec& spec,
                           const ParamMap& pm) {
  if (d != DecoderKind::oracle_bayes && !ml_supported(pm.family)) {
    throw CapabilityError(
        "decode: max_likelihood/bic decoders support cpt and gaussian "
        "families only");
  }
  DecodeContext ctx;
  ctx.members = ensemble_members(spec);
  if (d == DecoderKind::oracle_bayes) {
    ctx.nets.reserve(ctx.members->size());
    for (const Dag& g : *ctx.members) ctx.nets.push_back(materialize(pm, g));
  }
  return ctx;
}

std::size_t decode_with(DecoderKind d, const DecodeContext& ctx,
                        const ParamMap& pm, const Dataset& data) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t gi = 0; gi < ctx.members->size(); ++gi) {
    double score;
    if (d == DecoderKind::oracle_bayes) {
      score = log_likelihood(ctx.nets[gi], data);
    } else {
      const auto [ll, params] = ml_score(pm.family, (*ctx.members)[gi], data);
      score = d == DecoderKind::bic && data.n > 0
                  ? ll - 0.5 * std::log(static_cast<double>(data.n)) * params
                  : ll;
    }
    if (score > best_score) {
      best_score = score;
      best = gi;
    }
  }
  return best;
}

std::string iso_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
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

EnsembleKind kind_from_name(const std::string& s) {
  if (s == "restricted_all") return EnsembleKind::restricted_all;
  if (s == "restricted_sparse") return EnsembleKind::restricted_sparse;
  if (s == "layered_all") return EnsembleKind::layered_all;
  if (s == "layered_sparse") return EnsembleKind::layered_sparse;
  throw UsageError("unknown ensemble kind: " + s);
}

const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::cpt: return "cpt";
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::noisy_or: return "noisy_or";
    case FamilyKind::logistic: return "logistic";
  }
  return "";
}

FamilyKind family_from_name(const std::string& s) {
  if (s == "cpt") return FamilyKind::cpt;
  if (s == "gaussian") return FamilyKind::gaussian;
  if (s == "noisy_or") return FamilyKind::noisy_or;
  if (s == "logistic") return FamilyKind::logistic;
  throw UsageError("unknown family kind: " + s);
}

json config_to_json(const ExperimentConfig& cfg) {
  json e;
  e["kind"] = kind_name(cfg.ensemble.kind);
  e["m"] = cfg.ensemble.m;
  if (cfg.ensemble.k) e["k"] = *cfg.ensemble.k;
  if (!cfg.ensemble.layers.empty()) e["layers"] = cfg.ensemble.layers;

  const FamilyModel& f = cfg.family;
  json fj;
  fj["kind"] = family_name(f.kind);
  switch (f.kind) {
    case FamilyKind::cpt:
      fj["v"] = f.v;
      fj["theta_min"] = f.theta_min;
      break;
    case FamilyKind::gaussian:
      fj["mu_a"] = f.mu_a;
      fj["mu_b"] = f.mu_b;
      fj["sigma_min"] = f.sigma_min;
      fj["sigma_max"] = f.sigma_max;
      break;
    case FamilyKind::noisy_or:
      fj["theta"] = f.theta;
      break;
    case FamilyKind::logistic:
      fj["w_max_1"] = f.w_max_1;
      break;
  }

  json c;
  c["ensemble"] = e;
  c["family"] = fj;
  c["decoder"] = to_string(cfg.decoder);
  c["param_seed"] = cfg.param_seed;
  c["data_seed"] = cfg.data_seed;
  c["n_grid"] = cfg.n_grid;
  c["trials"] = cfg.trials;
  return c;
}

ExperimentConfig config_from_json(const json& c) {
  ExperimentConfig cfg;
  const json& e = c.at("ensemble");
  cfg.ensemble.kind = kind_from_name(e.at("kind").get<std::string>());
  cfg.ensemble.m = e.at("m").get<int>();
  if (e.contains("k")) cfg.ensemble.k = e.at("k").get<int>();
  if (e.contains("layers")) {
    cfg.ensemble.layers = e.at("layers").get<std::vector<int>>();
  }
  const json& fj = c.at("family");
  FamilyModel f;
  f.kind = family_from_name(fj.at("kind").get<std::string>());
  switch (f.kind) {
    case FamilyKind::cpt:
      f = FamilyModel::make_cpt(fj.at("v").get<int>(),
                                fj.at("theta_min").get<double>());
      break;
    case FamilyKind::gaussian:
      f = FamilyModel::make_gaussian(
          fj.at("mu_a").get<double>(), fj.at("mu_b").get<double>(),
          fj.at("sigma_min").get<double>(), fj.at("sigma_max").get<double>());
      break;
    case FamilyKind::noisy_or:
      f = FamilyModel::make_noisy_or(fj.at("theta").get<double>());
      break;
    case FamilyKind::logistic:
      f = FamilyModel::make_logistic(fj.at("w_max_1").get<double>());
      break;
  }
  cfg.family = f;
  cfg.decoder = decoder_from_string(c.at("decoder").get<std::string>());
  cfg.param_seed = c.at("param_seed").get<std::uint64_t>();
  cfg.data_seed = c.at("data_seed").get<std::uint64_t>();
  cfg.n_grid = c.at("n_grid").get<std::vector<int>>();
  cfg.trials = c.at("trials").get<int>();
  return cfg;
}

}  // namespace

DecoderKind decoder_from_string(const std::string& s) {
  if (s == "oracle_bayes") return DecoderKind::oracle_bayes;
  if (s == "max_likelihood") return DecoderKind::max_likelihood;
  if (s == "bic") return DecoderKind::bic;
  throw UsageError("unknown decoder: " + s);
}

std::string to_string(DecoderKind d) {
  switch (d) {
    case DecoderKind::oracle_bayes: return "oracle_bayes";
    case DecoderKind::max_likelihood: return "max_likelihood";
    case DecoderKind::bic: return "bic";
  }
  return "";
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.ensemble);
  validate(cfg.family);
  if (cfg.trials < 100) {
    throw UsageError("ExperimentConfig: trials must be >= 100 (CI validity)");
  }
  for (int n : cfg.n_grid) {
    if (n < 0) throw UsageError("ExperimentConfig: n_grid entries must be >= 0");
  }
}

std::pair<double, double> wilson_ci(int failures, int trials) {
  if (trials < 0 || failures < 0 || failures > trials) {
    throw UsageError("wilson_ci: need 0 <= failures <= trials");
  }
  if (trials == 0) return {0.0, 1.0};
  const double z = 1.96;
  const double n = trials;
  const double p = static_cast<double>(failures) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Dag decode(DecoderKind d, const Dataset& data, const EnsembleSpec& spec,
           const ParamMap& pm) {
  validate(spec);
  validate(pm.family);
  const DecodeContext ctx = make_context(d, spec, pm);
  return (*ctx.members)[decode_with(d, ctx, pm, data)];
}

ExperimentResult run_error_curve(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult res;
  res.config = cfg;
  const ParamMap pm{cfg.family, cfg.param_seed};
  const DecodeContext ctx = make_context(cfg.decoder, cfg.ensemble, pm);
  const std::size_t c = ctx.members->size();
  std::vector<BayesNet> truth_nets;
  if (cfg.decoder == DecoderKind::oracle_bayes) {
    truth_nets = ctx.nets;
  } else {
    truth_nets.reserve(c);
    for (const Dag& g : *ctx.members) truth_nets.push_back(materialize(pm, g));
  }

  res.delta_max_used = delta_max(cfg.family);
  res.delta_mode = "closed_form";
  try {
    res.threshold_L = threshold(cfg.ensemble, res.delta_max_used).threshold_L;
  } catch (const DomainError& e) {
    res.note = e.what();
  }

  for (int n : cfg.n_grid) {
    ErrorPoint pt;
    pt.n = n;
    pt.trials = cfg.trials;
    for (int t = 0; t < cfg.trials; ++t) {
      auto grng = make_rng(derive_seed(cfg.data_seed, 0x47u,
                                       static_cast<std::uint64_t>(n),
                                       static_cast<std::uint64_t>(t)));
      const std::size_t truth = uniform_index(grng, c);
      const Dataset data = forward_sample(
          truth_nets[truth], n,
          derive_seed(cfg.data_seed, 0x44u, static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(t)));
      const std::size_t got = decode_with(cfg.decoder, ctx, pm, data);
      if (!markov_equivalent((*ctx.members)[got], (*ctx.members)[truth])) {
        ++pt.failures;
      }
    }
    pt.error_rate = static_cast<double>(pt.failures) / pt.trials;
    pt.std_error = std::sqrt(pt.error_rate * (1.0 - pt.error_rate) / pt.trials);
    std::tie(pt.ci_low, pt.ci_high) = wilson_ci(pt.failures, pt.trials);
    res.points.push_back(pt);
  }
  return res;
}

ThresholdReport verify_threshold(const ExperimentConfig& cfg) {
  validate(cfg);
  ThresholdReport rep;
  if (ensemble_size(cfg.ensemble) <= 1) {
    rep.skipped = true;
    rep.diagnostic = "ensemble has at most one member; nothing to decode";
    return rep;
  }

  FamilyModel fam = cfg.family;
  double delta = 0;
  double L = 0;
  const int max_adapt = 64;
  for (int iter = 0;; ++iter) {
    const ParamMap pm{fam, cfg.param_seed};
    delta = empirical_delta_max(cfg.ensemble, pm);
    if (delta > 0) {
      L = threshold(cfg.ensemble, delta).threshold_L;
      if (L >= 1.0) break;
    }
    if (fam.kind != FamilyKind::cpt || iter >= max_adapt) {
      rep.skipped = true;
      rep.threshold_L = L;
      rep.delta_max_used = delta;
      rep.diagnostic =
          "threshold admits no sample size (L < 1) and the family is not "
          "adaptable";
      return rep;
    }
    // Walk the table toward uniform: contrast shrinks, the threshold grows.
    fam.theta_min += (1.0 / fam.v - fam.theta_min) / 2.0;
  }
  rep.threshold_L = L;
  rep.delta_max_used = delta;
  if (fam.kind == FamilyKind::cpt) rep.theta_min_used = fam.theta_min;

  const int floor_l = static_cast<int>(std::floor(L));
  ExperimentConfig run_cfg = cfg;
  run_cfg.family = fam;
  if (run_cfg.n_grid.empty()) {
    const int n_max = std::min(floor_l, kMaxGridN);
    for (int n = 1; n <= n_max; ++n) run_cfg.n_grid.push_back(n);
  }
  rep.result = run_error_curve(run_cfg);
  rep.result.threshold_L = L;
  rep.result.delta_max_used = delta;
  rep.result.delta_mode = "empirical";
  if (cfg.n_grid.empty() && floor_l > kMaxGridN) {
    rep.result.note = "grid truncated at n = " + std::to_string(kMaxGridN);
  }

  // One-sided: the guarantee covers n <= floor(L) only; larger grid points
  // are informational.
  rep.passed = true;
  bool above = false;
  for (const ErrorPoint& pt : rep.result.points) {
    if (pt.n > floor_l) {
      above = true;
      continue;
    }
    if (pt.error_rate + 2.0 * pt.std_error < 0.5) {
      rep.passed = false;
      rep.diagnostic = "error rate too low at n = " + std::to_string(pt.n);
      break;
    }
  }
  if (above && rep.result.note.empty()) {
    rep.result.note = "no theoretical claim above the threshold";
  }
  return rep;
}

std::string to_json(const ExperimentResult& r, bool with_timestamp) {
  json out;
  out["schema"] = 1;
  if (with_timestamp) out["timestamp"] = iso_utc_now();
  out["config"] = config_to_json(r.config);
  out["threshold"] = r.threshold_L;
  out["theoretical_floor"] = 0.5;
  out["delta_max"] = r.delta_max_used;
  out["delta_mode"] = r.delta_mode;
  out["note"] = r.note;
  out["points"] = json::array();
  for (const ErrorPoint& pt : r.points) {
    json pj;
    pj["n"] = pt.n;
    pj["trials"] = pt.trials;
    pj["failures"] = pt.failures;
    pj["error"] = pt.error_rate;
    pj["std_error"] = pt.std_error;
    pj["ci_low"] = pt.ci_low;
    pj["ci_high"] = pt.ci_high;
    out["points"].push_back(pj);
  }
  return out.dump(2) + "\n";
}

std::string to_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "n,error,ci_low,ci_high,threshold\n";
  for (const ErrorPoint& pt : r.points) {
    os << pt.n << ',' << pt.error_rate << ',' << pt.ci_low << ','
       << pt.ci_high << ',' << r.threshold_L << '\n';
  }
  return os.str();
}

namespace {
std::string csv_companion(const std::string& json_path) {
  const std::size_t dot = json_path.rfind('.');
  const std::size_t slash = json_path.rfind('/');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash)) {
    return json_path + ".csv";
  }
  return json_path.substr(0, dot) + ".csv";
}
}  // namespace

void persist(const ExperimentResult& r, const std::string& json_path) {
  std::ofstream jf(json_path);
  if (!jf) throw UsageError("persist: cannot open " + json_path);
  jf << to_json(r, true);
  const std::string csv_path = csv_companion(json_path);
  std::ofstream cf(csv_path);
  if (!cf) throw UsageError("persist: cannot open " + csv_path);
  cf << to_csv(r);
}

ExperimentResult load_result(const std::string& json_path) {
  std::ifstream jf(json_path);
  if (!jf) throw UsageError("load_result: cannot open " + json_path);
  json in = json::parse(jf);
  ExperimentResult r;
  r.config = config_from_json(in.at("config"));
  r.threshold_L = in.at("threshold").get<double>();
  r.delta_max_used = in.at("delta_max").get<double>();
  r.delta_mode = in.at("delta_mode").get<std::string>();
  r.note = in.at("note").get<std::string>();
  for (const json& pj : in.at("points")) {
    ErrorPoint pt;
    pt.n = pj.at("n").get<int>();
    pt.trials = pj.at("trials").get<int>();
    pt.failures = pj.at("failures").get<int>();
    pt.error_rate = pj.at("error").get<double>();
    pt.std_error = pj.at("std_error").get<double>();
    pt.ci_low = pj.at("ci_low").get<double>();
    pt.ci_high = pj.at("ci_high").get<double>();
    r.points.push_back(pt);
  }
  return r;
}

}  // namespace bnl
