#include "nefqvf/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "nefqvf/errors.hpp"
#include "nefqvf/families.hpp"
#include "nefqvf/ldlr.hpp"
#include "nefqvf/meixner_series.hpp"
#include "nefqvf/model_io.hpp"
#include "nefqvf/orthopoly.hpp"
#include "nefqvf/spiked.hpp"

#ifndef NEFQVF_GIT_REVISION
#define NEFQVF_GIT_REVISION "unknown"
#endif

namespace nefqvf {

using json = nlohmann::ordered_json;

const char* git_revision() { return NEFQVF_GIT_REVISION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
  std::vector<std::string> notes;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }
};

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return format_double(v.get<double>());
  const std::string s = v.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << "\n";
  }
}

// JSON cannot hold inf/nan; write them as strings.
json json_cell(const json& v) {
  if (v.is_number_float() && !std::isfinite(v.get<double>())) return format_double(v.get<double>());
  return v;
}

json optional_number(bool present, double v) { return present ? json(v) : json(nullptr); }

std::string command_path(const CLI::App* leaf) {
  std::string path;
  for (const CLI::App* a = leaf; a != nullptr && a->get_parent() != nullptr; a = a->get_parent())
    path = a->get_name() + (path.empty() ? "" : " " + path);
  return path;
}

json collect_parameters(const CLI::App* leaf) {
  json params = json::object();
  std::vector<const CLI::App*> chain;
  for (const CLI::App* a = leaf; a != nullptr; a = a->get_parent()) chain.insert(chain.begin(), a);
  for (const CLI::App* a : chain) {
    for (const CLI::Option* opt : a->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "help" || name == "config" || name == "version") continue;
      if (opt->count() > 0) {
        const auto& res = opt->results();
        if (opt->get_expected_max() > 1 || res.size() > 1) params[name] = res;
        else params[name] = res.empty() ? std::string("true") : res.front();
      } else {
        params[name] = opt->get_default_str();
      }
    }
  }
  return params;
}

mpq_class parse_rational(const std::string& text, const std::string& what) {
  std::string t = text;
  try {
    if (t.find('.') == std::string::npos && t.find_first_of("eE") == std::string::npos) {
      mpq_class q(t, 10);
      q.canonicalize();
      return q;
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError(what + ": expected a rational number, got '" + text + "'");
  }
  // Decimals and exponents: the double nearest to the text, converted exactly.
  return mpq_class(parse_number(text, what));
}

double to_double_checked(const std::string& text, const std::string& what) { return parse_number(text, what); }

TpcaThresholdForm parse_threshold_form(const std::string& s) {
  if (s == "midpoint") return TpcaThresholdForm::kBulkEdgeMidpoint;
  if (s == "printed") return TpcaThresholdForm::kSwappedLambdaStar;
  throw ConfigError("threshold-form: expected midpoint or printed, got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Commands.

Table families_list() {
  Table t{{"tag", "v0", "v1", "v2", "mean_lower", "mean_upper", "theta_lower", "theta_upper", "discrete"}, {}, {}};
  for (const auto& f : canonical_families()) {
    const auto om = f.mean_domain();
    const auto th = f.natural_domain();
    t.add({f.tag(), f.v0(), f.v1(), f.v2(), om.lower, om.upper, th.lower, th.upper, f.is_discrete()});
  }
  return t;
}

Table families_check(const std::string& tag, double mean, std::uint64_t samples, std::uint64_t seed) {
  const auto family = parse_family_tag(tag);
  MeanParamMeasure measure(family, mean);
  const double theta = mean_to_natural(family, mean);
  Rng rng = make_stream(seed, 0);
  MomentAccumulator acc;
  for (std::uint64_t i = 0; i < samples; ++i) acc.add(sample_one(measure, rng));
  const double n = static_cast<double>(acc.count);
  const double m = acc.mean();
  const double var = acc.count > 1 ? (acc.sum_sq - n * m * m) / (n - 1.0) : 0.0;
  Table t{{"tag", "mean", "variance", "theta", "psi", "sample_mean", "sample_mean_stderr",
           "sample_variance", "samples", "seed"},
          {},
          {}};
  t.add({family.tag(), mean, measure.variance(), theta, cumulant_fn(family, theta), m,
         acc.stderr_of_mean(), var, samples, seed});
  return t;
}

struct ExactFamily {
  FamilyKind kind;
  mpq_class parameter;
};

ExactFamily exact_family(const FamilySpec& f) { return {f.kind(), mpq_class(f.parameter())}; }

Table orthopoly_build(const std::string& tag, const std::string& mean_text, int K, bool exact) {
  const auto family = parse_family_tag(tag);
  if (exact) {
    const auto ef = exact_family(family);
    const auto basis = build_basis_exact(ef.kind, ef.parameter, parse_rational(mean_text, "mean"), K);
    Table t{{"k", "squared_norm", "squared_norm_exact", "status"}, {}, {}};
    for (int k = 0; k <= K; ++k) {
      if (static_cast<std::size_t>(k) < basis.squared_norms.size()) {
        const auto& q = basis.squared_norms[static_cast<std::size_t>(k)];
        t.add({k, q.get_d(), q.get_str(), "ok"});
      } else {
        t.add({k, 0.0, "0", "degenerate"});
      }
    }
    return t;
  }
  const double mean = to_double_checked(mean_text, "mean");
  const auto basis = build_basis(family, mean, K);
  Table t{{"k", "squared_norm", "expected", "status"}, {}, {}};
  const double V = variance_fn(family, mean);
  for (int k = 0; k <= K; ++k) {
    const double expected = a_norm(k, family.v2()) * std::pow(V, k);
    if (k <= basis.top_degree()) t.add({k, basis.squared_norm(k), expected, "ok"});
    else t.add({k, 0.0, expected, "degenerate"});
  }
  return t;
}

Table orthopoly_dump(const std::string& tag, const std::string& mean_text, int K, bool exact) {
  const auto family = parse_family_tag(tag);
  if (exact) {
    const auto ef = exact_family(family);
    const auto basis = build_basis_exact(ef.kind, ef.parameter, parse_rational(mean_text, "mean"), K);
    Table t{{"k", "j", "numerator", "denominator"}, {}, {}};
    for (std::size_t k = 0; k < basis.monic.size(); ++k)
      for (std::size_t j = 0; j < basis.monic[k].size(); ++j) {
        const auto& c = basis.monic[k][j];
        t.add({k, j, c.get_num().get_str(), c.get_den().get_str()});
      }
    return t;
  }
  const auto basis = build_basis(family, to_double_checked(mean_text, "mean"), K);
  Table t{{"k", "j", "coefficient"}, {}, {}};
  for (int k = 0; k <= basis.top_degree(); ++k) {
    const auto& c = basis.monic_coeffs(k);
    for (std::size_t j = 0; j < c.size(); ++j) t.add({k, j, c[j]});
  }
  return t;
}

Table tau_dump(int K) {
  const auto table = build_translation_table(K);
  Table t{{"k", "l", "numerator", "denominator"}, {}, {}};
  for (int k = 0; k <= K; ++k) {
    const auto& c = table.exact_coeffs(k);
    for (std::size_t l = 0; l < c.size(); ++l) {
      if (c[l] == 0) continue;
      t.add({k, l, c[l].get_num().get_str(), c[l].get_den().get_str()});
    }
  }
  return t;
}

const std::vector<std::string> kLdlrColumns{"mode", "D", "value", "stderr", "samples", "seed", "v"};

Table ldlr_exact_cmd(const std::string& model_path, const std::string& degree_text, bool by_degree) {
  const auto spec = load_model(model_path);
  const Degree D = parse_degree(degree_text);
  Table t{kLdlrColumns, {}, {}};
  if (D.is_infinite()) {
    if (spec.kind != SpikeKind::kKin) throw ConfigError("degree: inf needs a kin model");
    const auto r = ldlr_full(spec.kin());
    t.add({"exact", "inf", r.value, nullptr, nullptr, nullptr, r.v});
    return t;
  }
  std::vector<double> sums;
  if (spec.kind == SpikeKind::kKin) {
    sums = ldlr_exact_by_degree(spec.kin(), D.value());
  } else {
    const auto table = build_translation_table(std::max(D.value(), 1));
    sums = ldlr_exact_additive_by_degree(spec.additive(), D.value(), table);
  }
  const int first = by_degree ? 0 : D.value();
  for (int d = first; d <= D.value(); ++d)
    t.add({"exact", d, sums[static_cast<std::size_t>(d)], nullptr, nullptr, nullptr, spec.family.v2()});
  return t;
}

Table ldlr_mc_cmd(const std::string& model_path, const std::string& degree_text, std::uint64_t samples,
                  std::uint64_t seed, int workers) {
  const auto spec = load_model(model_path);
  const Degree D = parse_degree(degree_text);
  const auto rows = overlap_bound_mc(spec.kin(), D, samples, seed, workers);
  Table t{kLdlrColumns, {}, {}};
  for (const auto& r : rows)
    t.add({"monte-carlo", D.str(), r.value, r.stderr_, r.samples, seed, r.v});
  if (rows.size() > 1) t.notes.push_back("second row uses v = 0, an upper bound when v2 < 0");
  return t;
}

Table ldlr_compare_cmd(const std::vector<std::string>& paths, int D) {
  std::vector<KinSpikedModel> models;
  for (const auto& p : paths) models.push_back(load_model(p).kin());
  const auto rows = channel_compare(models, D);
  Table t{{"mode", "D", "value", "stderr", "samples", "seed", "family", "v2"}, {}, {}};
  for (const auto& r : rows)
    t.add({"exact", D, r.result.value, nullptr, nullptr, nullptr, r.family.tag(), r.family.v2()});
  t.notes.push_back(non_decreasing_in_v2(rows) ? "values are non-decreasing in v2"
                                               : "values are NOT non-decreasing in v2");
  return t;
}

Table ldlr_sbm_cmd(const std::vector<int>& ns, const std::vector<double>& as, const std::vector<double>& bs,
                   int D, std::uint64_t samples, std::uint64_t seed, const std::string& estimator_name,
                   bool with_exact, int workers) {
  if (as.size() != bs.size()) throw ConfigError("b: expected as many values as a");
  KsEstimator est;
  if (estimator_name == "tilted") est = KsEstimator::kTilted;
  else if (estimator_name == "plain") est = KsEstimator::kPlain;
  else throw ConfigError("estimator: expected tilted or plain, got '" + estimator_name + "'");
  std::vector<std::pair<double, double>> ab;
  for (std::size_t i = 0; i < as.size(); ++i) ab.emplace_back(as[i], bs[i]);
  const auto rows = sbm_ks_scan(ns, ab, D, samples, seed, est, workers);
  Table t{{"n", "a", "b", "D", "ks_ratio", "side", "value", "stderr", "samples", "seed", "exact"}, {}, {}};
  for (const auto& r : rows) {
    const char* side = r.ks_ratio < 1.0 ? "below" : (r.ks_ratio > 1.0 ? "above" : "boundary");
    t.add({r.n, r.a, r.b, r.D, r.ks_ratio, side, r.value, r.stderr_, r.samples, seed,
           optional_number(with_exact, with_exact ? sbm_ks_exact(r.n, r.a, r.b, r.D) : 0.0)});
  }
  return t;
}

Table spiked_simulate_cmd(int n, double lambda, const NoiseSpec& noise, bool planted, int trials,
                          const std::string& test, TpcaThresholdForm form, std::uint64_t seed) {
  std::vector<TestId> tests;
  if (test == "all") tests = {TestId::kPca, TestId::kTpca, TestId::kMixed};
  else tests = {parse_test_id(test)};
  if (trials < 1) throw ConfigError("trials: must be >= 1");
  Table t{{"trial", "n", "lambda", "noise", "planted", "branch", "max_abs_entry", "test", "statistic",
           "threshold", "label", "seed"},
          {},
          {}};
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(trial));
    const auto inst = sample_wig(n, lambda, noise, planted, rng);
    for (TestId id : tests) {
      const auto v = run_test(id, inst, form);
      t.add({trial, n, lambda, noise.str(), planted, inst.branch(), inst.max_abs_entry(), test_name(id),
             v.statistic, v.threshold, std::string(1, label_char(v.label)), seed});
    }
  }
  return t;
}

Table power_curve_cmd(const std::string& test, const NoiseSpec& noise, const std::vector<double>& lambdas,
                      int n, int trials, std::uint64_t seed, int workers, TpcaThresholdForm form) {
  const TestId id = parse_test_id(test);
  const auto rows = power_curve(id, noise, lambdas, n, trials, seed, workers, form);
  Table t{{"test", "noise", "n", "lambda", "trials", "type1", "type1_stderr", "type2", "type2_stderr",
           "power", "seed"},
          {},
          {}};
  for (const auto& r : rows)
    t.add({test, noise.str(), n, r.lambda, r.trials, r.type1, r.type1_stderr, r.type2, r.type2_stderr,
           r.power(), seed});
  return t;
}

Table entrywise_cmd(int n, double lambda, int D, std::uint64_t samples, std::uint64_t seed, int workers,
                    std::ostream& err) {
  const bool small = n <= 8 && D <= 3;
  double exact = 0.0, chain = 0.0;
  if (small) {
    const auto table = build_translation_table(std::max(D, 1));
    exact = entrywise_ldlr_exact(n, lambda, D, table);
    chain = entrywise_chain_bound_exact(n, lambda, D);
  }
  const auto mc = entrywise_ldlr_mc_bound(n, lambda, D, samples, seed, workers);
  if (mc.outside_regime)
    err << "warning: lambda >= lambda* + 1/(20D); the bound is not expected to stay finite\n";
  if (mc.divergent) err << "warning: c >= 1, the overlap expectation diverges as n grows\n";
  Table t{{"n", "lambda", "D", "exact", "chain_bound", "c", "mc_value", "mc_stderr", "samples", "seed",
           "outside_regime"},
          {},
          {}};
  t.add({n, lambda, D, optional_number(small, exact), optional_number(small, chain), mc.c,
         mc.estimate.value, mc.estimate.stderr_, samples, seed, mc.outside_regime});
  return t;
}

Table mix_test_cmd(int n, double lambda, double alpha, int trials, std::uint64_t seed, int workers,
                   TpcaThresholdForm form) {
  const auto rows = power_curve(TestId::kMixed, NoiseSpec::mixed(alpha), {lambda}, n, trials, seed, workers, form);
  const auto& r = rows.front();
  Table t{{"n", "lambda", "alpha", "trials", "type1", "type1_stderr", "type2", "type2_stderr",
           "average_error", "seed"},
          {},
          {}};
  t.add({n, lambda, alpha, trials, r.type1, r.type1_stderr, r.type2, r.type2_stderr,
         (r.type1 + r.type2) / 2.0, seed});
  return t;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-degree likelihood ratio toolkit for NEF-QVF spiked models"};
  app.name("nefqvf");
  app.set_config("--config", "", "INI file; sections name subcommands, e.g. [ldlr.exact]");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", std::string("nefqvf ") + git_revision());
  app.require_subcommand(1);
  // Global options may appear after the subcommand; subcommands inherit this.
  app.fallthrough();

  std::string output_path, report_path;
  int workers = 1;
  app.add_option("--output", output_path, "Write CSV here instead of stdout");
  app.add_option("--report", report_path, "Write a JSON report with parameters and results");
  app.add_option("--workers", workers, "Worker threads for Monte Carlo loops")->check(CLI::Range(1, 256))->capture_default_str();

  // Shared parameter storage; each subcommand binds what it uses.
  std::string family_tag = "gaussian", mean_text = "0", model_path, degree_text = "4", estimator = "tilted";
  std::string noise_name = "sech", test = "pca", threshold_form = "midpoint";
  std::vector<std::string> model_paths;
  std::vector<int> ns{50, 100, 200};
  std::vector<double> as{3.0}, bs{1.0}, lambdas{0.8, 1.0, 1.2, 1.5};
  int K = 8, D = 4, n = 2000, trials = 50;
  double lambda = 1.5, alpha = 3.0, mean = 0.0;
  std::uint64_t samples = 100000, seed = 1;
  bool exact = false, by_degree = false, planted = false, with_exact = false;

  auto* families = app.add_subcommand("families", "Family table and checks")->require_subcommand(1);
  auto* fam_list = families->add_subcommand("list", "List the six families");
  auto* fam_check = families->add_subcommand("check", "Validate a family at a mean and sample from it");
  fam_check->add_option("--family", family_tag, "Family tag")->required();
  fam_check->add_option("--mean", mean, "Mean parameter")->required();
  fam_check->add_option("--samples", samples)->capture_default_str();
  fam_check->add_option("--seed", seed)->capture_default_str();

  auto* ortho = app.add_subcommand("orthopoly", "Orthogonal polynomial bases")->require_subcommand(1);
  auto* ortho_build = ortho->add_subcommand("build", "Squared norms of the monic basis");
  auto* ortho_dump = ortho->add_subcommand("dump", "Monic coefficients in y");
  for (auto* sub : {ortho_build, ortho_dump}) {
    sub->add_option("--family", family_tag, "Family tag")->required();
    sub->add_option("--mean", mean_text, "Null mean (decimal or p/q)")->required();
    sub->add_option("--degree", K, "Maximum degree K")->capture_default_str();
    sub->add_flag("--exact", exact, "Exact rational arithmetic (K <= 12)");
  }

  auto* tau = app.add_subcommand("tau", "Translation polynomials of the sech family")->require_subcommand(1);
  auto* tau_dump_cmd = tau->add_subcommand("dump", "Exact coefficients of tau_hat_k");
  int tau_K = kDefaultTranslationDegree;
  tau_dump_cmd->add_option("--degree", tau_K, "Maximum degree K (<= 200)")->capture_default_str();

  auto* ldlr = app.add_subcommand("ldlr", "Low-degree likelihood ratio norms")->require_subcommand(1);
  auto* ldlr_exact_sub = ldlr->add_subcommand("exact", "Exact component sum for an atom prior");
  ldlr_exact_sub->add_option("--model", model_path, "Model file")->required();
  ldlr_exact_sub->add_option("--degree", degree_text, "Degree bound D, or inf for the full norm")
      ->capture_default_str();
  ldlr_exact_sub->add_flag("--by-degree", by_degree, "One row per d = 0..D");
  auto* ldlr_mc_sub = ldlr->add_subcommand("mc", "Monte Carlo z-score overlap bound");
  ldlr_mc_sub->add_option("--model", model_path, "Model file")->required();
  ldlr_mc_sub->add_option("--degree", degree_text, "Degree bound D or inf")->capture_default_str();
  ldlr_mc_sub->add_option("--samples", samples)->capture_default_str();
  ldlr_mc_sub->add_option("--seed", seed)->capture_default_str();
  auto* ldlr_compare_sub = ldlr->add_subcommand("compare", "Exact norms across channels sharing z-scores");
  ldlr_compare_sub->add_option("--model", model_paths, "Model files (repeat)")->required();
  ldlr_compare_sub->add_option("--degree", D)->capture_default_str();
  auto* ldlr_sbm_sub = ldlr->add_subcommand("sbm", "Kesten-Stigum scan for the two-community block model");
  ldlr_sbm_sub->add_option("--n", ns, "Graph sizes")->delimiter(',')->capture_default_str();
  ldlr_sbm_sub->add_option("--a", as, "Within-community rates")->delimiter(',')->capture_default_str();
  ldlr_sbm_sub->add_option("--b", bs, "Across-community rates")->delimiter(',')->capture_default_str();
  int sbm_D = 20;
  ldlr_sbm_sub->add_option("--degree", sbm_D)->capture_default_str();
  ldlr_sbm_sub->add_option("--samples", samples)->capture_default_str();
  ldlr_sbm_sub->add_option("--seed", seed)->capture_default_str();
  ldlr_sbm_sub->add_option("--estimator", estimator, "tilted or plain")->capture_default_str();
  ldlr_sbm_sub->add_flag("--exact", with_exact, "Also report the exact expectation");

  auto* spiked = app.add_subcommand("spiked", "Spiked Wigner matrices")->require_subcommand(1);
  auto* simulate = spiked->add_subcommand("simulate", "Sample instances and run tests");
  auto* power = spiked->add_subcommand("power-curve", "Empirical error rates over a lambda grid");
  auto* entry = spiked->add_subcommand("entrywise-bound", "Entrywise-degree likelihood ratio sums");
  auto* mix = app.add_subcommand("mix", "Mixed noise model")->require_subcommand(1);
  auto* mix_test = mix->add_subcommand("test", "Error rates of the branching test");

  for (auto* sub : {simulate, power, mix_test}) {
    sub->add_option("--n", n, "Matrix size")->capture_default_str();
    sub->add_option("--trials", trials)->capture_default_str();
    sub->add_option("--seed", seed)->capture_default_str();
    sub->add_option("--alpha", alpha, "Heavy-tail exponent")->capture_default_str();
    sub->add_option("--threshold-form", threshold_form, "tpca threshold: midpoint or printed")
        ->capture_default_str();
  }
  for (auto* sub : {simulate, power}) sub->add_option("--noise", noise_name, "sech, heavy or mixed")->capture_default_str();
  simulate->add_option("--lambda", lambda)->capture_default_str();
  simulate->add_flag("--planted", planted, "Plant a spike (default: null)");
  std::string sim_test = "all";
  simulate->add_option("--test", sim_test, "pca, tpca, mixed or all")->capture_default_str();
  power->add_option("--test", test, "pca, tpca or mixed")->capture_default_str();
  power->add_option("--lambda", lambdas, "Lambda grid")->delimiter(',')->capture_default_str();
  mix_test->add_option("--lambda", lambda)->capture_default_str();

  int entry_n = 8, entry_D = 2;
  double entry_lambda = 0.5;
  entry->add_option("--n", entry_n)->capture_default_str();
  entry->add_option("--lambda", entry_lambda)->capture_default_str();
  entry->add_option("--degree", entry_D)->capture_default_str();
  entry->add_option("--samples", samples)->capture_default_str();
  entry->add_option("--seed", seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  // Deepest parsed subcommand.
  CLI::App* leaf = &app;
  for (;;) {
    auto subs = leaf->get_subcommands();
    if (subs.empty()) break;
    leaf = subs.front();
  }

  try {
    Table table;
    const auto form = parse_threshold_form(threshold_form);
    if (leaf == fam_list) table = families_list();
    else if (leaf == fam_check) table = families_check(family_tag, mean, samples, seed);
    else if (leaf == ortho_build) table = orthopoly_build(family_tag, mean_text, K, exact);
    else if (leaf == ortho_dump) table = orthopoly_dump(family_tag, mean_text, K, exact);
    else if (leaf == tau_dump_cmd) table = tau_dump(tau_K);
    else if (leaf == ldlr_exact_sub) table = ldlr_exact_cmd(model_path, degree_text, by_degree);
    else if (leaf == ldlr_mc_sub) table = ldlr_mc_cmd(model_path, degree_text, samples, seed, workers);
    else if (leaf == ldlr_compare_sub) table = ldlr_compare_cmd(model_paths, D);
    else if (leaf == ldlr_sbm_sub)
      table = ldlr_sbm_cmd(ns, as, bs, sbm_D, samples, seed, estimator, with_exact, workers);
    else if (leaf == simulate)
      table = spiked_simulate_cmd(n, lambda, parse_noise(noise_name, alpha), planted, trials, sim_test, form, seed);
    else if (leaf == power)
      table = power_curve_cmd(test, parse_noise(noise_name, alpha), lambdas, n, trials, seed, workers, form);
    else if (leaf == entry) table = entrywise_cmd(entry_n, entry_lambda, entry_D, samples, seed, workers, err);
    else if (leaf == mix_test) table = mix_test_cmd(n, lambda, alpha, trials, seed, workers, form);
    else throw ConfigError("no command selected");

    if (output_path.empty()) {
      write_csv(table, out);
    } else {
      std::ofstream f(output_path);
      if (!f) throw ConfigError("output: cannot open '" + output_path + "'");
      write_csv(table, f);
    }
    for (const auto& note : table.notes) err << "note: " << note << "\n";

    if (!report_path.empty()) {
      json report;
      report["tool"] = "nefqvf";
      report["git_revision"] = git_revision();
      report["command"] = command_path(leaf);
      report["parameters"] = collect_parameters(leaf);
      report["columns"] = table.columns;
      json rows = json::array();
      for (const auto& row : table.rows) {
        json r = json::array();
        for (const auto& c : row) r.push_back(json_cell(c));
        rows.push_back(std::move(r));
      }
      report["rows"] = std::move(rows);
      report["notes"] = table.notes;
      std::ofstream f(report_path);
      if (!f) throw ConfigError("report: cannot open '" + report_path + "'");
      f << report.dump(2) << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitCap;
  } catch (const NumericInstability& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace nefqvf
