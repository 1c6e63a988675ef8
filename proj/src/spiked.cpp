#include "nefqvf/spiked.hpp"

#include <bit>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nefqvf/errors.hpp"
#include "nefqvf/families.hpp"
#include "nefqvf/lanczos.hpp"

namespace nefqvf {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t pair_count(int n) { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2; }

// Offset of row i in the packed upper triangle.
std::size_t row_offset(int n, int i) {
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(2 * n - i - 1) / 2;
}

void check_alpha(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw DomainError("alpha must be a finite number > 1");
}

}  // namespace

std::string NoiseSpec::str() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case NoiseKind::kSech:
      return "sech";
    case NoiseKind::kHeavy:
      os << "heavy(" << alpha << ")";
      return os.str();
    case NoiseKind::kMixed:
      os << "mixed(" << alpha << ")";
      return os.str();
  }
  return "?";
}

NoiseSpec parse_noise(const std::string& kind, double alpha) {
  if (kind == "sech") return NoiseSpec::sech();
  if (kind == "heavy") {
    check_alpha(alpha);
    return NoiseSpec::heavy(alpha);
  }
  if (kind == "mixed") {
    check_alpha(alpha);
    return NoiseSpec::mixed(alpha);
  }
  throw ConfigError("noise: expected sech, heavy or mixed, got '" + kind + "'");
}

double WigInstance::entry(int i, int j) const {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  return entries_[row_offset(n_, i) + static_cast<std::size_t>(j - i - 1)];
}

double WigInstance::max_abs_entry() const {
  double m = 0.0;
  for (double y : entries_) m = std::max(m, std::fabs(y));
  return m;
}

Eigen::MatrixXd WigInstance::normalized_matrix(double (*transform)(double)) const {
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  std::size_t idx = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      const double y = transform ? transform(entries_[idx]) : entries_[idx];
      a(i, j) = a(j, i) = y * scale;
      ++idx;
    }
  }
  return a;
}

WigInstance WigInstance::from_entries(int n, double lambda, NoiseSpec noise,
                                      std::vector<double> entries) {
  if (n < 2) throw DomainError("matrix size must be >= 2");
  if (entries.size() != pair_count(n)) throw DomainError("entry count must be n(n-1)/2");
  WigInstance inst;
  inst.n_ = n;
  inst.lambda_ = lambda;
  inst.noise_ = noise;
  inst.entries_ = std::move(entries);
  return inst;
}

double sample_heavy(double alpha, Rng& rng) {
  const double nu = alpha - 1.0;
  std::student_t_distribution<double> t(nu);
  return t(rng) / std::sqrt(nu);
}

double heavy_tail_mass(double alpha, double t) {
  check_alpha(alpha);
  if (t <= 0.0) return 1.0;
  boost::math::quadrature::exp_sinh<double> integrator;
  auto density = [alpha](double x) { return std::pow(1.0 + x * x, -alpha / 2.0); };
  const double total = integrator.integrate(density);
  const double tail = integrator.integrate([&](double u) { return density(t + u); });
  return tail / total;
}

WigInstance sample_wig(int n, double lambda, NoiseSpec noise, bool planted, Rng& rng) {
  if (n < 2) throw DomainError("matrix size must be >= 2");
  if (n > kMaxMatrixSize) throw CapExceeded("matrix size exceeds the cap of 4000");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  if (noise.kind != NoiseKind::kSech) check_alpha(noise.alpha);

  WigInstance inst;
  inst.n_ = n;
  inst.lambda_ = lambda;
  inst.noise_ = noise;
  inst.planted_ = planted;

  bool heavy = noise.kind == NoiseKind::kHeavy;
  if (noise.kind == NoiseKind::kMixed && !planted) {
    inst.branch_ = (rng() >> 63) ? 2 : 1;
    heavy = inst.branch_ == 2;
  }
  if (planted) {
    inst.spike_.resize(static_cast<std::size_t>(n));
    for (auto& x : inst.spike_) x = (rng() >> 63) ? 1 : -1;
  }

  const double s = lambda / std::sqrt(static_cast<double>(n));
  inst.entries_.resize(pair_count(n));
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double y = heavy ? sample_heavy(noise.alpha, rng) : sample_sech_standard(rng);
      if (planted) y += s * inst.spike_[static_cast<std::size_t>(i)] * inst.spike_[static_cast<std::size_t>(j)];
      inst.entries_[idx++] = y;
    }
  }
  return inst;
}

double lambda_star() { return 2.0 * std::numbers::sqrt2 / kPi; }

double lambda_star_fisher() {
  // w'/w = -(pi/2) tanh(pi x / 2), so int w'^2/w = int (pi/2)^2 tanh^2(pi x/2) w(x) dx.
  boost::math::quadrature::exp_sinh<double> integrator;
  auto integrand = [](double x) {
    const double h = kPi * x / 2.0;
    const double th = std::tanh(h);
    return (kPi / 2.0) * (kPi / 2.0) * th * th * 0.5 / std::cosh(h);
  };
  const double half = integrator.integrate(integrand);
  return 1.0 / std::sqrt(2.0 * half);
}

double tanh_transform(double y) { return (kPi / 2.0) * std::tanh((kPi / 2.0) * y); }

double pca_threshold(double lambda) {
  if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
  return (2.0 + lambda + 1.0 / lambda) / 2.0;
}

double tpca_threshold(double lambda, TpcaThresholdForm form) {
  if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
  const double ls = lambda_star();
  if (form == TpcaThresholdForm::kSwappedLambdaStar)
    return (2.0 * ls + ls * ls * lambda + 1.0 / lambda) / 2.0;
  return (2.0 / ls + lambda / (ls * ls) + 1.0 / lambda) / 2.0;
}

TestVerdict pca_test(const WigInstance& inst) {
  const double stat = top_eigenvalue(inst.normalized_matrix()).value;
  const double thr = pca_threshold(inst.lambda());
  return {stat >= thr ? Label::kP : Label::kQ, stat, thr};
}

TestVerdict tpca_test(const WigInstance& inst, TpcaThresholdForm form) {
  const double stat = top_eigenvalue(inst.normalized_matrix(&tanh_transform)).value;
  const double thr = tpca_threshold(inst.lambda(), form);
  return {stat >= thr ? Label::kP : Label::kQ, stat, thr};
}

TestVerdict mixed_test(const WigInstance& inst, TpcaThresholdForm form) {
  const double cutoff = 10.0 * std::log(static_cast<double>(inst.n()));
  const double m = inst.max_abs_entry();
  if (m > cutoff) return {Label::kQ, m, cutoff, true};
  return tpca_test(inst, form);
}

TestId parse_test_id(const std::string& name) {
  if (name == "pca") return TestId::kPca;
  if (name == "tpca") return TestId::kTpca;
  if (name == "mixed") return TestId::kMixed;
  throw ConfigError("test: expected pca, tpca or mixed, got '" + name + "'");
}

std::string test_name(TestId id) {
  switch (id) {
    case TestId::kPca:
      return "pca";
    case TestId::kTpca:
      return "tpca";
    case TestId::kMixed:
      return "mixed";
  }
  return "?";
}

TestVerdict run_test(TestId id, const WigInstance& inst, TpcaThresholdForm form) {
  switch (id) {
    case TestId::kPca:
      return pca_test(inst);
    case TestId::kTpca:
      return tpca_test(inst, form);
    case TestId::kMixed:
      return mixed_test(inst, form);
  }
  throw DomainError("unknown test");
}

// ---------------------------------------------------------------------------
// Entrywise-degree sums.

namespace {

void check_entrywise_caps(int n, int D) {
  if (n < 2) throw DomainError("entrywise sum: n must be >= 2");
  if (D < 0) throw DomainError("entrywise sum: D must be >= 0");
  if (n > 8) throw CapExceeded("entrywise sum: n exceeds the cap of 8");
  if (D > 3) throw CapExceeded("entrywise sum: D exceeds the cap of 3");
}

// E_x prod_{i<j} (a + b x_i x_j) over uniform x in {+-1}^n. Flipping every
// sign leaves the product unchanged, so x_0 = +1 is fixed.
double vertex_sign_sum(int n, double a, double b) {
  const unsigned count = 1u << (n - 1);
  double total = 0.0;
  for (unsigned mask = 0; mask < count; ++mask) {
    auto sign = [mask](int i) { return i == 0 ? 1 : ((mask >> (i - 1)) & 1u ? -1 : 1); };
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) prod *= a + b * sign(i) * sign(j);
    total += prod;
  }
  return total / count;
}

}  // namespace

double entrywise_ldlr_exact(int n, double lambda, int D, const TranslationPolyTable& table) {
  check_entrywise_caps(n, D);
  if (D > table.max_degree()) throw DomainError("entrywise sum: D exceeds the translation table");
  const double s = lambda / std::sqrt(static_cast<double>(n));
  double even = 0.0, odd = 0.0;
  for (int k = 0; k <= D; ++k) {
    const double t = tau_hat_eval(table, k, s);
    (k % 2 == 0 ? even : odd) += t * t;
  }
  return vertex_sign_sum(n, even, odd);
}

double entrywise_chain_bound_exact(int n, double lambda, int D) {
  check_entrywise_caps(n, D);
  const double s = std::fabs(lambda) / std::sqrt(static_cast<double>(n));
  double even = 1.0, odd = 0.0;
  if (s > 0.0) {
    for (int k = 1; k <= D; ++k) {
      const double b = tau_value_bound(k, s);
      (k % 2 == 0 ? even : odd) += b * b;
    }
  }
  return vertex_sign_sum(n, even, odd);
}

double entrywise_mc_coefficient(int n, double lambda, int D) {
  if (n < 1 || D < 1) throw DomainError("entrywise bound: need n >= 1 and D >= 1");
  const double ls = lambda_star();
  return std::pow(std::exp(1.0) * D, 2.0 * lambda / std::sqrt(static_cast<double>(n))) * lambda *
         lambda * (1.0 / (ls * ls) - 1.0 / (3.0 * D));
}

double rademacher_overlap_mgf_exact(int n, double c) {
  if (n < 1) throw DomainError("overlap mgf: n must be >= 1");
  // <x1, x2> = 2 j - n with j ~ Binomial(n, 1/2); sum in log space.
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double o = 2.0 * j - n;
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) -
                            n * std::numbers::ln2 + c * o * o / (2.0 * n);
    total += std::exp(log_term);
  }
  return total;
}

OverlapMgfEstimate rademacher_overlap_mgf_mc(int n, double c, std::uint64_t samples,
                                             std::uint64_t seed, int workers) {
  if (n < 1) throw DomainError("overlap mgf: n must be >= 1");
  if (samples == 0) throw DomainError("overlap mgf: samples must be >= 1");
  constexpr std::uint64_t kBlock = 1 << 16;
  const std::size_t blocks = static_cast<std::size_t>((samples + kBlock - 1) / kBlock);
  std::vector<MomentAccumulator> acc(blocks);
  const int words = (n + 63) / 64;
  const std::uint64_t tail_mask = (n % 64 == 0) ? ~0ULL : ((1ULL << (n % 64)) - 1);
  parallel_blocks(blocks, static_cast<unsigned>(std::max(workers, 1)), [&](std::size_t b) {
    Rng rng = make_stream(seed, b);
    const std::uint64_t begin = b * kBlock;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kBlock);
    for (std::uint64_t s = begin; s < end; ++s) {
      // Coordinatewise product x1 * x2 is uniform on {+-1}^n; count its +1 entries.
      int plus = 0;
      for (int w = 0; w < words; ++w) {
        std::uint64_t bits = rng();
        if (w == words - 1) bits &= tail_mask;
        plus += std::popcount(bits);
      }
      const double o = 2.0 * plus - n;
      acc[b].add(std::exp(c * o * o / (2.0 * n)));
    }
  });
  MomentAccumulator total;
  for (const auto& a : acc) total.merge(a);
  return {total.mean(), total.stderr_of_mean(), samples};
}

EntrywiseMcBound entrywise_ldlr_mc_bound(int n, double lambda, int D, std::uint64_t samples,
                                         std::uint64_t seed, int workers) {
  const double c = entrywise_mc_coefficient(n, lambda, D);
  EntrywiseMcBound out;
  out.c = c;
  out.outside_regime = !(std::fabs(lambda) < lambda_star() + 1.0 / (20.0 * D));
  out.divergent = c >= 1.0;
  out.estimate = rademacher_overlap_mgf_mc(n, c, samples, seed, workers);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PowerRow> power_curve(TestId test, NoiseSpec noise, const std::vector<double>& lambdas,
                                  int n, int trials, std::uint64_t seed, int workers,
                                  TpcaThresholdForm form) {
  if (trials < 1) throw DomainError("power curve: trials must be >= 1");
  if (lambdas.empty()) throw DomainError("power curve: empty lambda grid");
  const std::size_t per_point = static_cast<std::size_t>(trials) * 2;
  std::vector<char> rejected(lambdas.size() * per_point, 0);
  parallel_blocks(rejected.size(), static_cast<unsigned>(std::max(workers, 1)), [&](std::size_t job) {
    const std::size_t g = job / per_point;
    const std::size_t t = (job % per_point) / 2;
    const bool planted = job % 2 == 1;
    Rng rng = make_stream(seed, (static_cast<std::uint64_t>(g) << 32) | (t << 1) | (planted ? 1 : 0));
    const auto inst = sample_wig(n, lambdas[g], noise, planted, rng);
    const auto verdict = run_test(test, inst, form);
    // planted: record a miss (type II); null: record a false alarm (type I)
    rejected[job] = planted ? (verdict.label == Label::kQ) : (verdict.label == Label::kP);
  });
  std::vector<PowerRow> rows;
  for (std::size_t g = 0; g < lambdas.size(); ++g) {
    int type1 = 0, type2 = 0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(trials); ++t) {
      type1 += rejected[g * per_point + 2 * t];
      type2 += rejected[g * per_point + 2 * t + 1];
    }
    const double m = trials;
    const double p1 = type1 / m, p2 = type2 / m;
    rows.push_back({lambdas[g], trials, p1, std::sqrt(p1 * (1 - p1) / m), p2,
                    std::sqrt(p2 * (1 - p2) / m)});
  }
  return rows;
}

}  // namespace nefqvf
