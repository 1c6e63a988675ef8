#include "nefqvf/families.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "nefqvf/cumulants.hpp"
#include "nefqvf/errors.hpp"

namespace nefqvf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void require_mean(const FamilySpec& family, double mu) {
  if (!family.mean_domain().contains(mu)) {
    std::ostringstream os;
    os << "mean " << mu << " outside the mean domain of " << family.tag();
    throw DomainError(os.str());
  }
}

// log cosh(a) without overflow.
double log_cosh(double a) {
  const double b = std::fabs(a);
  return b + std::log1p(std::exp(-2.0 * b)) - std::numbers::ln2;
}

}  // namespace

FamilySpec FamilySpec::gaussian(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("gaussian: sigma2 must be positive");
  return FamilySpec(FamilyKind::kGaussian, sigma2, sigma2, 0.0, 0.0);
}

FamilySpec FamilySpec::poisson() { return FamilySpec(FamilyKind::kPoisson, 0.0, 0.0, 1.0, 0.0); }

FamilySpec FamilySpec::gamma(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("gamma: alpha must be positive");
  return FamilySpec(FamilyKind::kGamma, alpha, 0.0, 0.0, 1.0 / alpha);
}

FamilySpec FamilySpec::binomial(int m) {
  if (m < 1) throw DomainError("binomial: m must be a positive integer");
  return FamilySpec(FamilyKind::kBinomial, m, 0.0, 1.0, -1.0 / m);
}

FamilySpec FamilySpec::negative_binomial(int m) {
  if (m < 1) throw DomainError("negbinomial: m must be a positive integer");
  return FamilySpec(FamilyKind::kNegBinomial, m, 0.0, 1.0, 1.0 / m);
}

FamilySpec FamilySpec::sech() { return FamilySpec(FamilyKind::kSechR1, 0.0, 1.0, 0.0, 1.0); }

OpenInterval FamilySpec::mean_domain() const {
  switch (kind_) {
    case FamilyKind::kGaussian:
    case FamilyKind::kSechR1:
      return {-kInf, kInf};
    case FamilyKind::kPoisson:
    case FamilyKind::kGamma:
    case FamilyKind::kNegBinomial:
      return {0.0, kInf};
    case FamilyKind::kBinomial:
      return {0.0, param_};
  }
  return {0.0, 0.0};
}

OpenInterval FamilySpec::natural_domain() const {
  switch (kind_) {
    case FamilyKind::kGaussian:
    case FamilyKind::kPoisson:
    case FamilyKind::kBinomial:
      return {-kInf, kInf};
    case FamilyKind::kGamma:
      return {-kInf, 1.0};
    case FamilyKind::kNegBinomial:
      return {-kInf, std::numbers::ln2};
    case FamilyKind::kSechR1:
      return {-kPi / 2.0, kPi / 2.0};
  }
  return {0.0, 0.0};
}

bool FamilySpec::is_discrete() const {
  return kind_ == FamilyKind::kPoisson || kind_ == FamilyKind::kBinomial ||
         kind_ == FamilyKind::kNegBinomial;
}

std::string FamilySpec::tag() const {
  switch (kind_) {
    case FamilyKind::kGaussian:
      return "gaussian{sigma2=" + format_number(param_) + "}";
    case FamilyKind::kPoisson:
      return "poisson";
    case FamilyKind::kGamma:
      return "gamma{alpha=" + format_number(param_) + "}";
    case FamilyKind::kBinomial:
      return "binomial{m=" + std::to_string(trials()) + "}";
    case FamilyKind::kNegBinomial:
      return "negbinomial{m=" + std::to_string(trials()) + "}";
    case FamilyKind::kSechR1:
      return "sech";
  }
  return "?";
}

FamilySpec parse_family_tag(std::string_view tag) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  tag = trim(tag);
  const std::string full(tag);
  std::string_view name = tag;
  std::map<std::string, std::string, std::less<>> params;
  if (auto brace = tag.find('{'); brace != std::string_view::npos) {
    if (tag.back() != '}') throw ConfigError("family tag '" + full + "': missing closing '}'");
    name = trim(tag.substr(0, brace));
    std::string_view body = tag.substr(brace + 1, tag.size() - brace - 2);
    while (!body.empty()) {
      const auto comma = body.find(',');
      std::string_view item = trim(body.substr(0, comma));
      body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("family tag '" + full + "': parameter '" + std::string(item) + "' lacks '='");
      params.emplace(std::string(trim(item.substr(0, eq))), std::string(trim(item.substr(eq + 1))));
    }
  }

  auto take = [&](std::string_view key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    double value = 0.0;
    const auto& s = it->second;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
      throw ConfigError("family tag '" + full + "': parameter '" + std::string(key) +
                        "' has non-numeric value '" + s + "'");
    params.erase(it);
    return value;
  };
  auto take_int = [&](std::string_view key, int fallback) {
    const double v = take(key, fallback);
    if (v != std::floor(v) || v < 1 || v > 1e6)
      throw ConfigError("family tag '" + full + "': parameter '" + std::string(key) +
                        "' must be a positive integer");
    return static_cast<int>(v);
  };

  std::string lowered(name);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  FamilySpec result = FamilySpec::poisson();
  try {
    if (lowered == "gaussian" || lowered == "normal") {
      result = FamilySpec::gaussian(take("sigma2", 1.0));
    } else if (lowered == "poisson") {
      result = FamilySpec::poisson();
    } else if (lowered == "gamma") {
      result = FamilySpec::gamma(take("alpha", 1.0));
    } else if (lowered == "exponential") {
      result = FamilySpec::gamma(1.0);
    } else if (lowered == "binomial") {
      result = FamilySpec::binomial(take_int("m", 1));
    } else if (lowered == "bernoulli") {
      result = FamilySpec::binomial(1);
    } else if (lowered == "negbinomial" || lowered == "negative_binomial") {
      result = FamilySpec::negative_binomial(take_int("m", 1));
    } else if (lowered == "geometric") {
      result = FamilySpec::negative_binomial(1);
    } else if (lowered == "sech" || lowered == "hypsecant") {
      result = FamilySpec::sech();
    } else {
      throw ConfigError("family tag '" + full + "': unknown family '" + std::string(name) + "'");
    }
  } catch (const DomainError& e) {
    throw ConfigError("family tag '" + full + "': " + e.what());
  }
  if (!params.empty())
    throw ConfigError("family tag '" + full + "': unknown parameter '" + params.begin()->first + "'");
  return result;
}

std::vector<FamilySpec> canonical_families() {
  return {FamilySpec::gaussian(1.0), FamilySpec::poisson(),           FamilySpec::gamma(2.0),
          FamilySpec::binomial(3),   FamilySpec::negative_binomial(2), FamilySpec::sech()};
}

bool in_v2_set(double v, double tol) {
  if (v >= -tol) return true;
  const double m = -1.0 / v;
  return std::fabs(m - std::round(m)) <= tol * std::max(1.0, m) && std::round(m) >= 1.0;
}

double variance_fn(const FamilySpec& family, double mu) {
  require_mean(family, mu);
  return family.v0() + family.v1() * mu + family.v2() * mu * mu;
}

double z_score(const FamilySpec& family, double mu, double x) {
  return (x - mu) / std::sqrt(variance_fn(family, mu));
}

double mean_to_natural(const FamilySpec& family, double mu) {
  require_mean(family, mu);
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::kGaussian:
      return mu / p;
    case FamilyKind::kPoisson:
      return std::log(mu);
    case FamilyKind::kGamma:
      return 1.0 - p / mu;
    case FamilyKind::kBinomial:
      return std::log(mu / (p - mu));
    case FamilyKind::kNegBinomial:
      return std::log(2.0 * mu / (p + mu));
    case FamilyKind::kSechR1:
      return std::atan(mu);
  }
  return 0.0;
}

double cumulant_fn(const FamilySpec& family, double theta) {
  if (!family.natural_domain().contains(theta)) {
    std::ostringstream os;
    os << "theta " << theta << " outside the natural domain of " << family.tag();
    throw DomainError(os.str());
  }
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::kGaussian:
      return 0.5 * p * theta * theta;
    case FamilyKind::kPoisson:
      return std::expm1(theta);
    case FamilyKind::kGamma:
      return -p * std::log1p(-theta);
    case FamilyKind::kBinomial:
      // m log((1 + e^theta) / 2)
      return p * (std::log1p(std::exp(-std::fabs(theta))) + std::max(theta, 0.0) - std::numbers::ln2);
    case FamilyKind::kNegBinomial:
      return -p * std::log(2.0 - std::exp(theta));
    case FamilyKind::kSechR1:
      return -std::log(std::cos(theta));
  }
  return 0.0;
}

double cumulant_derivative(const FamilySpec& family, double theta) {
  if (!family.natural_domain().contains(theta)) throw DomainError("theta outside the natural domain");
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::kGaussian:
      return p * theta;
    case FamilyKind::kPoisson:
      return std::exp(theta);
    case FamilyKind::kGamma:
      return p / (1.0 - theta);
    case FamilyKind::kBinomial:
      return p / (1.0 + std::exp(-theta));
    case FamilyKind::kNegBinomial: {
      const double e = std::exp(theta);
      return p * e / (2.0 - e);
    }
    case FamilyKind::kSechR1:
      return std::tan(theta);
  }
  return 0.0;
}

double cumulant(const FamilySpec& family, double mu, int j) {
  require_mean(family, mu);
  if (j < 1) throw DomainError("cumulant order must be >= 1");
  const auto kappa = cumulant_polynomials<double>(family.v0(), family.v1(), family.v2(), j);
  return eval_poly(kappa[static_cast<std::size_t>(j)], mu);
}

MeanParamMeasure::MeanParamMeasure(FamilySpec family, double mean) : family_(family), mean_(mean) {
  require_mean(family_, mean_);
}

double MeanParamMeasure::density(double x) const {
  const double mu = mean_;
  const double p = family_.parameter();
  auto is_count = [](double v) { return v >= 0.0 && v == std::floor(v); };
  switch (family_.kind()) {
    case FamilyKind::kGaussian: {
      const double d = x - mu;
      return std::exp(-0.5 * d * d / p) / std::sqrt(2.0 * kPi * p);
    }
    case FamilyKind::kPoisson:
      if (!is_count(x)) return 0.0;
      return std::exp(x * std::log(mu) - mu - std::lgamma(x + 1.0));
    case FamilyKind::kGamma: {
      if (x <= 0.0) return 0.0;
      const double scale = mu / p;
      return std::exp((p - 1.0) * std::log(x) - x / scale - std::lgamma(p) - p * std::log(scale));
    }
    case FamilyKind::kBinomial: {
      if (!is_count(x) || x > p) return 0.0;
      const double q = mu / p;
      return std::exp(std::lgamma(p + 1.0) - std::lgamma(x + 1.0) - std::lgamma(p - x + 1.0) +
                      x * std::log(q) + (p - x) * std::log1p(-q));
    }
    case FamilyKind::kNegBinomial: {
      if (!is_count(x)) return 0.0;
      const double q = mu / (p + mu);
      return std::exp(std::lgamma(x + p) - std::lgamma(x + 1.0) - std::lgamma(p) + x * std::log(q) +
                      p * std::log1p(-q));
    }
    case FamilyKind::kSechR1: {
      // cos(theta) e^{theta x} (1/2) sech(pi x / 2)
      const double theta = std::atan(mu);
      return std::exp(std::log(std::cos(theta)) + theta * x - std::numbers::ln2 - log_cosh(kPi * x / 2.0));
    }
  }
  return 0.0;
}

double sample_sech_standard(Rng& rng) {
  const double u = open_unit(rng);
  return (2.0 / kPi) * std::log(std::tan(kPi * u / 2.0));
}

namespace {

double sample_sech_tilted(double theta, Rng& rng) {
  if (theta == 0.0) return sample_sech_standard(rng);
  const double right_rate = kPi / 2.0 - theta;
  const double left_rate = kPi / 2.0 + theta;
  const double p_right = (1.0 / right_rate) / (1.0 / right_rate + 1.0 / left_rate);
  for (;;) {
    const bool right = open_unit(rng) < p_right;
    const double e = -std::log(open_unit(rng));
    const double x = right ? e / right_rate : -e / left_rate;
    if (open_unit(rng) * (1.0 + std::exp(-kPi * std::fabs(x))) < 1.0) return x;
  }
}

}  // namespace

double sample_one(const MeanParamMeasure& measure, Rng& rng) {
  const double mu = measure.mean();
  const auto& family = measure.family();
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::kGaussian:
      return std::normal_distribution<double>(mu, std::sqrt(p))(rng);
    case FamilyKind::kPoisson:
      return static_cast<double>(std::poisson_distribution<long long>(mu)(rng));
    case FamilyKind::kGamma:
      return std::gamma_distribution<double>(p, mu / p)(rng);
    case FamilyKind::kBinomial:
      return static_cast<double>(std::binomial_distribution<int>(family.trials(), mu / p)(rng));
    case FamilyKind::kNegBinomial:
      return static_cast<double>(
          std::negative_binomial_distribution<long long>(family.trials(), p / (p + mu))(rng));
    case FamilyKind::kSechR1:
      return sample_sech_tilted(std::atan(mu), rng);
  }
  return 0.0;
}

std::vector<double> sample(const MeanParamMeasure& measure, Rng& rng, std::size_t count) {
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_one(measure, rng));
  return out;
}

}  // namespace nefqvf
