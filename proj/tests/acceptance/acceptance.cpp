// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nefqvf/errors.hpp"
#include "nefqvf/families.hpp"
#include "nefqvf/ldlr.hpp"
#include "nefqvf/meixner_series.hpp"
#include "nefqvf/orthopoly.hpp"
#include "nefqvf/spiked.hpp"

using namespace nefqvf;

namespace {

constexpr std::uint64_t kSeed = 20261016;

struct Outcome {
  bool pass;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// E[g(Y)] for Y from the measure: direct summation for discrete families,
// double-exponential quadrature otherwise.
double expectation(const MeanParamMeasure& m, const std::function<double(double)>& g) {
  const auto& f = m.family();
  if (f.is_discrete()) {
    double total = 0.0;
    for (int y = 0; y < 3000; ++y) {
      const double p = m.density(y);
      if (p > 0.0) total += p * g(y);
    }
    return total;
  }
  auto integrand = [&](double y) {
    const double d = m.density(y);
    return d == 0.0 ? 0.0 : d * g(y);
  };
  if (f.kind() == FamilyKind::kGamma) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(integrand, 1e-14);
  }
  boost::math::quadrature::sinh_sinh<double> q;
  return q.integrate(integrand, 1e-14);
}

double reference_mean(const FamilySpec& f) {
  switch (f.kind()) {
    case FamilyKind::kGaussian: return 0.4;
    case FamilyKind::kPoisson: return 2.0;
    case FamilyKind::kGamma: return 1.5;
    case FamilyKind::kBinomial: return 1.2;
    case FamilyKind::kNegBinomial: return 0.7;
    case FamilyKind::kSechR1: return -0.8;
  }
  return 0.0;
}

double ahat(int k, double v) {
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= 1.0 + v * j;
  return r;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

Outcome orthogonality() {
  Stopwatch sw;
  double worst_cross = 0.0, worst_unit = 0.0, worst_norm = 0.0;
  for (const auto& f : canonical_families()) {
    const double mu = reference_mean(f);
    const auto basis = build_basis(f, mu, 8);
    const MeanParamMeasure m(f, mu);
    const double V = variance_fn(f, mu);
    const int top = basis.top_degree();
    for (int k = 0; k <= top; ++k) {
      for (int l = k; l <= top; ++l) {
        const double e = expectation(m, [&](double y) {
          return basis.eval_normalized(k, y) * basis.eval_normalized(l, y);
        });
        if (k == l) worst_unit = std::max(worst_unit, std::fabs(e - 1.0));
        else worst_cross = std::max(worst_cross, std::fabs(e));
      }
      const double monic = expectation(m, [&](double y) {
        const double p = basis.eval_monic(k, y);
        return p * p;
      });
      const double expected = factorial(k) * ahat(k, f.v2()) * std::pow(V, k);
      worst_norm = std::max(worst_norm, std::fabs(monic - expected) / expected);
    }
  }
  const double t = sw.seconds();
  const bool ok = worst_cross < 1e-8 && worst_unit < 1e-8 && worst_norm < 1e-8 && t < 60;
  return {ok, "max |E p_k p_l| = " + fmt(worst_cross) + ", max |E p_k^2 - 1| = " + fmt(worst_unit) +
                  ", max rel norm error = " + fmt(worst_norm) + ", " + fmt(t) + " s"};
}

Outcome kin_expectation() {
  Rng rng = make_stream(kSeed, 2);
  const auto fams = canonical_families();
  struct Range {
    double lo, hi;
  };
  auto range = [](const FamilySpec& f) -> Range {
    switch (f.kind()) {
      case FamilyKind::kGaussian: return {-1.0, 1.0};
      case FamilyKind::kPoisson: return {0.5, 3.0};
      case FamilyKind::kGamma: return {0.5, 3.0};
      case FamilyKind::kBinomial: return {0.3, 2.7};
      case FamilyKind::kNegBinomial: return {0.3, 2.5};
      case FamilyKind::kSechR1: return {-1.0, 1.0};
    }
    return {0, 1};
  };
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const auto& f = fams[t % fams.size()];
    const auto r = range(f);
    std::uniform_real_distribution<double> u(r.lo, r.hi);
    const double mu = u(rng);
    const double s = std::sqrt(variance_fn(f, mu));
    double x, z;
    do {
      x = u(rng);
      z = (x - mu) / s;
    } while (std::fabs(z) < 0.25);
    const auto basis = build_basis(f, mu, 6);
    const int k = std::uniform_int_distribution<int>(1, basis.top_degree() < 6 ? basis.top_degree() : 6)(rng);
    const MeanParamMeasure planted(f, x);
    const double lhs = expectation(planted, [&](double y) { return basis.eval_normalized(k, y); });
    const double rhs = std::sqrt(ahat(k, f.v2()) / factorial(k)) * std::pow(z, k);
    worst = std::max(worst, std::fabs(lhs - rhs) / std::fabs(rhs));
  }
  return {worst < 1e-6, "30 tuples, max relative error " + fmt(worst)};
}

// Random atom prior on N coordinates with values in (lo, hi).
KinSpikedModel random_model(FamilySpec f, Rng& rng, double lo, double hi) {
  std::uniform_int_distribution<int> nd(1, 3), ad(1, 4);
  std::uniform_real_distribution<double> u(lo, hi), w(0.1, 1.0);
  const int N = nd(rng), A = ad(rng);
  std::vector<double> mus(N);
  for (auto& mu : mus) mu = u(rng);
  std::vector<SpikeAtom> atoms(A);
  double total = 0.0;
  for (auto& a : atoms) {
    a.x.resize(N);
    for (auto& v : a.x) v = u(rng);
    a.probability = w(rng);
    total += a.probability;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) acc += (atoms[i].probability /= total);
  atoms.back().probability = 1.0 - acc;
  return {f, mus, SpikePrior::from_atoms(SpikeKind::kKin, atoms)};
}

// E f^{<=D}(r; v) over independent atom pairs, computed from the variance function.
double overlap_oracle(const KinSpikedModel& m, int D, double v) {
  double total = 0.0;
  for (const auto& a : m.prior.atoms())
    for (const auto& b : m.prior.atoms()) {
      double r = 0.0;
      for (std::size_t i = 0; i < m.N(); ++i) {
        const double mu = m.null_means[i];
        r += (a.x[i] - mu) * (b.x[i] - mu) / variance_fn(m.family, mu);
      }
      double f = 0.0, rp = 1.0;
      for (int d = 0; d <= D; ++d) {
        f += ahat(d, v) * rp / factorial(d);
        rp *= r;
      }
      total += a.probability * b.probability * f;
    }
  return total;
}

Outcome equality_and_bounds() {
  Rng rng = make_stream(kSeed, 3);
  double worst_eq = 0.0;
  int pos_violations = 0, neg_violations = 0;
  for (int t = 0; t < 50; ++t) {
    const int D = t % 5;
    auto m = random_model(t % 2 ? FamilySpec::poisson() : FamilySpec::gaussian(), rng, 0.2, 2.0);
    worst_eq = std::max(worst_eq, std::fabs(ldlr_exact(m, D).value - overlap_oracle(m, D, 0.0)));
  }
  for (int t = 0; t < 50; ++t) {
    const int D = t % 5;
    auto m = random_model(FamilySpec::gamma(1.0), rng, 0.2, 2.0);
    if (ldlr_exact(m, D).value > overlap_oracle(m, D, 1.0) + 1e-10) ++pos_violations;
  }
  for (int t = 0; t < 50; ++t) {
    const int D = t % 5;
    auto m = random_model(FamilySpec::binomial(1), rng, 0.05, 0.95);
    const double v = ldlr_exact(m, D).value;
    if (v < overlap_oracle(m, D, -1.0) - 1e-10 || v > overlap_oracle(m, D, 0.0) + 1e-10) ++neg_violations;
  }
  const bool ok = worst_eq <= 1e-10 && pos_violations == 0 && neg_violations == 0;
  return {ok, "v2=0 max |diff| = " + fmt(worst_eq) + "; bound violations v2=1: " +
                  std::to_string(pos_violations) + "/50, v2=-1: " + std::to_string(neg_violations) + "/50"};
}

Outcome full_norm() {
  KinSpikedModel bern{FamilySpec::binomial(1), {0.5},
                      SpikePrior::from_atoms(SpikeKind::kKin, {{{0.75}, 1.0}})};
  // E_Q[(P/Q)^2] for Bernoulli(3/4) against Bernoulli(1/2).
  const double bern_oracle = 0.75 * 0.75 / 0.5 + 0.25 * 0.25 / 0.5;
  const double b = ldlr_full(bern).value;
  bool ok = std::fabs(b - bern_oracle) < 1e-12;
  std::string detail = "bernoulli " + fmt(b);
  for (double s : {0.3, 1.0}) {
    KinSpikedModel g{FamilySpec::gaussian(), {0.0}, SpikePrior::from_atoms(SpikeKind::kKin, {{{s}, 1.0}})};
    const double v = ldlr_full(g).value;
    ok = ok && std::fabs(v - std::exp(s * s)) < 1e-8;
    detail += ", gaussian s=" + fmt(s) + ": " + fmt(v) + " vs " + fmt(std::exp(s * s));
  }
  return {ok, detail};
}

Outcome channel_monotonicity() {
  Rng rng = make_stream(kSeed, 5);
  struct Channel {
    FamilySpec f;
    double mu;
  };
  // Null means chosen so that x = mu + sqrt(V(mu)) z stays in the mean domain for |z| < 0.9.
  const Channel channels[] = {{FamilySpec::binomial(1), 0.5},      {FamilySpec::binomial(2), 1.0},
                              {FamilySpec::gaussian(), 0.0},       {FamilySpec::poisson(), 2.0},
                              {FamilySpec::negative_binomial(2), 2.0}, {FamilySpec::gamma(1.0), 1.0}};
  std::uniform_real_distribution<double> zu(-0.9, 0.9), w(0.1, 1.0);
  std::uniform_int_distribution<int> nd(1, 3), ad(1, 4), dd(1, 6);
  int violations = 0;
  double worst_tie = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int N = nd(rng), A = ad(rng), D = dd(rng);
    std::vector<std::vector<double>> z(A, std::vector<double>(N));
    std::vector<double> p(A);
    double total = 0.0;
    for (int a = 0; a < A; ++a) {
      for (auto& v : z[a]) v = zu(rng);
      total += p[a] = w(rng);
    }
    double acc = 0.0;
    for (int a = 0; a + 1 < A; ++a) acc += (p[a] /= total);
    p[A - 1] = 1.0 - acc;
    std::vector<KinSpikedModel> models;
    for (const auto& c : channels) {
      const double s = std::sqrt(variance_fn(c.f, c.mu));
      std::vector<SpikeAtom> atoms;
      for (int a = 0; a < A; ++a) {
        std::vector<double> x(N);
        for (int i = 0; i < N; ++i) x[i] = c.mu + s * z[a][i];
        atoms.push_back({x, p[a]});
      }
      models.push_back({c.f, std::vector<double>(N, c.mu), SpikePrior::from_atoms(SpikeKind::kKin, atoms)});
    }
    const auto rows = channel_compare(models, D);
    if (!non_decreasing_in_v2(rows)) ++violations;
    worst_tie = std::max(worst_tie, std::fabs(rows[2].result.value - rows[3].result.value));
  }
  return {violations == 0 && worst_tie < 1e-10,
          "100 instances, v2 in {-1,-1/2,0,1/2,1}: " + std::to_string(violations) +
              " ordering violations, max |gaussian - poisson| = " + fmt(worst_tie)};
}

Outcome translation_polynomials() {
  Stopwatch sw;
  const auto table = build_translation_table(50);
  int parity = 0, coeff = 0, value = 0;
  for (int k = 0; k <= 50; ++k) {
    const auto& c = table.exact_coeffs(k);
    for (int l = 0; l <= k; ++l) {
      if ((k - l) % 2 != 0 && c[l] != 0) ++parity;
      if (k >= 1 && l == 0 && c[l] != 0) ++parity;
      if (k >= 1 && l >= 1 && std::fabs(c[l].get_d()) > tau_coeff_bound(k, l)) ++coeff;
    }
    if (k >= 1)
      for (double x : {0.01, 0.05, 0.1, 0.5, 1.0})
        if (std::fabs(tau_hat_eval(table, k, x)) > tau_value_bound(k, x)) ++value;
  }

  const auto basis = build_basis(FamilySpec::sech(), 0.0, 6);
  const std::uint64_t samples = 10'000'000;
  double worst_z = 0.0;
  for (double x : {0.1, 0.5}) {
    std::vector<MomentAccumulator> acc(7);
    Rng rng = make_stream(kSeed, x < 0.3 ? 61 : 62);
    for (std::uint64_t s = 0; s < samples; ++s) {
      const double y = x + sample_sech_standard(rng);
      for (int k = 1; k <= 6; ++k) acc[k].add(basis.eval_normalized(k, y));
    }
    for (int k = 1; k <= 6; ++k)
      worst_z = std::max(worst_z, std::fabs(acc[k].mean() - tau_hat_eval(table, k, x)) / acc[k].stderr_of_mean());
  }
  const double t = sw.seconds();
  const bool ok = parity == 0 && coeff == 0 && value == 0 && worst_z < 4.0 && t < 300;
  return {ok, "parity/coefficient/value violations " + std::to_string(parity) + "/" + std::to_string(coeff) +
                  "/" + std::to_string(value) + ", additive expectation max |z| = " + fmt(worst_z) +
                  " at 1e7 samples, " + fmt(t) + " s"};
}

Outcome spiked_thresholds() {
  Stopwatch sw;
  const int n = 2000, trials = 50;
  const auto a = power_curve(TestId::kPca, NoiseSpec::sech(), {1.5}, n, trials, kSeed + 71).front();
  const auto b_pca = power_curve(TestId::kPca, NoiseSpec::sech(), {0.95}, n, trials, kSeed + 72).front();
  const auto b_tpca = power_curve(TestId::kTpca, NoiseSpec::sech(), {0.95}, n, trials, kSeed + 72).front();
  const auto c = power_curve(TestId::kMixed, NoiseSpec::mixed(3.0), {1.2}, n, trials, kSeed + 73).front();
  const double t = sw.seconds();
  const bool ok_a = a.power() >= 0.9 && a.type1 <= 0.1;
  const bool ok_b = b_tpca.power() >= 0.8 && b_pca.power() <= 0.5;
  const double mix_error = (c.type1 + c.type2) / 2.0;
  const bool ok_c = mix_error <= 0.1;
  std::string detail = "(a) pca power " + fmt(a.power()) + " type-I " + fmt(a.type1) + (ok_a ? " ok" : " FAIL") +
                       "; (b) tpca power " + fmt(b_tpca.power()) + " (type-I " + fmt(b_tpca.type1) +
                       "), pca power " + fmt(b_pca.power()) + (ok_b ? " ok" : " FAIL") +
                       "; (c) mixed average error " + fmt(mix_error) + (ok_c ? " ok" : " FAIL") + "; " +
                       fmt(t) + " s";
  return {ok_a && ok_b && ok_c && t < 900, detail};
}

// Sum over k in {0..D}^{edges} with every vertex degree even of prod tau_hat_k(s)^2.
double entrywise_brute(int n, double lambda, int D, const TranslationPolyTable& table) {
  const double s = lambda / std::sqrt(double(n));
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  const int E = static_cast<int>(edges.size());
  long combos = 1;
  for (int e = 0; e < E; ++e) combos *= D + 1;
  double total = 0.0;
  for (long c = 0; c < combos; ++c) {
    long r = c;
    std::vector<int> deg(n, 0);
    double term = 1.0;
    for (int e = 0; e < E; ++e) {
      const int k = static_cast<int>(r % (D + 1));
      r /= D + 1;
      deg[edges[e].first] += k;
      deg[edges[e].second] += k;
      const double tv = tau_hat_eval(table, k, s);
      term *= tv * tv;
    }
    if (std::all_of(deg.begin(), deg.end(), [](int d) { return d % 2 == 0; })) total += term;
  }
  return total;
}

Outcome entrywise_bound() {
  const auto table = build_translation_table(2);
  const double exact = entrywise_ldlr_exact(4, 0.5, 2, table);
  const double brute = entrywise_brute(4, 0.5, 2, table);
  const double flipped = entrywise_ldlr_exact(4, -0.5, 2, table);
  const auto mc = rademacher_overlap_mgf_mc(400, 0.5, 1'000'000, kSeed + 8);
  const double target = std::sqrt(2.0);
  const bool ok = std::fabs(exact - brute) <= 1e-12 && std::fabs(exact - flipped) <= 1e-12 &&
                  std::fabs(mc.value - target) <= 0.1 * target;
  return {ok, "exact " + fmt(exact) + " vs brute force " + fmt(brute) + ", lambda -> -lambda " + fmt(flipped) +
                  ", mc " + fmt(mc.value) + " +- " + fmt(mc.stderr_) + " vs sqrt 2"};
}

Outcome kesten_stigum() {
  Stopwatch sw;
  const auto rows = sbm_ks_scan({50, 100, 200}, {{3.0, 1.0}, {7.5, 1.5}}, 20, 1'000'000, kSeed + 9);
  double worst_ratio = 0.0;
  for (int i = 1; i < 3; ++i) worst_ratio = std::max(worst_ratio, rows[i].value / rows[i - 1].value);
  const double growth = rows[5].value / rows[3].value;
  const double t = sw.seconds();
  const bool ok = rows[0].ks_ratio < 1.0 && rows[3].ks_ratio > 1.0 && worst_ratio < 1.1 && growth > 2.0 && t < 300;
  std::string detail = "below (ratio " + fmt(rows[0].ks_ratio) + "):";
  for (int i = 0; i < 3; ++i) detail += " " + fmt(rows[i].value);
  detail += ", max successive ratio " + fmt(worst_ratio) + "; above (ratio " + fmt(rows[3].ks_ratio) + "):";
  for (int i = 3; i < 6; ++i) detail += " " + fmt(rows[i].value);
  detail += ", growth n=50 -> 200 " + fmt(growth) + "; " + fmt(t) + " s";
  return {ok, detail};
}

Outcome lambda_star_check() {
  const double a = lambda_star(), b = lambda_star_fisher();
  return {std::fabs(a - b) < 1e-6, "2 sqrt 2 / pi = " + fmt(a) + ", quadrature " + fmt(b)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"orthogonality", orthogonality},
      {"kin expectation identity", kin_expectation},
      {"overlap bound equality and directions", equality_and_bounds},
      {"full norm fixtures", full_norm},
      {"channel monotonicity", channel_monotonicity},
      {"translation polynomials", translation_polynomials},
      {"spiked matrix tests", spiked_thresholds},
      {"entrywise bound", entrywise_bound},
      {"Kesten-Stigum scan", kesten_stigum},
      {"lambda star", lambda_star_check},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
