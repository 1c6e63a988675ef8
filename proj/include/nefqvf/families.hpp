#pragma once

// The six basic natural exponential families with quadratic variance
// function, in mean parametrization.
//
//   family            base measure            V(mu)              Omega
//   gaussian{sigma2}  N(0, sigma2)            sigma2             (-inf, inf)
//   poisson           Poisson(1)              mu                 (0, inf)
//   gamma{alpha}      Gamma(alpha, 1)         mu^2 / alpha       (0, inf)
//   binomial{m}       Bin(m, 1/2)             mu - mu^2 / m      (0, m)
//   negbinomial{m}    NB(m, 1/2)              mu + mu^2 / m      (0, inf)
//   sech              (1/2) sech(pi x / 2)    1 + mu^2           (-inf, inf)
//
// Tags: a family name optionally followed by a parameter map in braces,
// e.g. "gamma{alpha=2}", "binomial{m=3}". Aliases: normal, bernoulli
// (binomial{m=1}), exponential (gamma{alpha=1}), geometric (negbinomial{m=1}).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nefqvf/random.hpp"

namespace nefqvf {

enum class FamilyKind { kGaussian, kPoisson, kGamma, kBinomial, kNegBinomial, kSechR1 };

// Open interval (lower, upper); endpoints may be infinite.
struct OpenInterval {
  double lower;
  double upper;

  bool contains(double x) const { return x > lower && x < upper; }
};

class FamilySpec {
 public:
  static FamilySpec gaussian(double sigma2 = 1.0);
  static FamilySpec poisson();
  static FamilySpec gamma(double alpha);
  static FamilySpec binomial(int m);
  static FamilySpec negative_binomial(int m);
  static FamilySpec sech();

  FamilyKind kind() const { return kind_; }
  // sigma2 (gaussian), alpha (gamma), m (binomial / negbinomial); 0 otherwise.
  double parameter() const { return param_; }
  int trials() const { return static_cast<int>(param_); }

  double v0() const { return v0_; }
  double v1() const { return v1_; }
  double v2() const { return v2_; }

  OpenInterval mean_domain() const;
  OpenInterval natural_domain() const;
  bool is_discrete() const;
  std::string tag() const;

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;

 private:
  FamilySpec(FamilyKind kind, double param, double v0, double v1, double v2)
      : kind_(kind), param_(param), v0_(v0), v1_(v1), v2_(v2) {}

  FamilyKind kind_;
  double param_;
  double v0_, v1_, v2_;
};

// Parses a family tag; throws ConfigError naming the bad key or value.
FamilySpec parse_family_tag(std::string_view tag);

// One representative of each of the six families.
std::vector<FamilySpec> canonical_families();

// True iff v lies in [0, inf) or equals -1/m for a positive integer m.
bool in_v2_set(double v, double tol = 1e-12);

double variance_fn(const FamilySpec& family, double mu);
double z_score(const FamilySpec& family, double mu, double x);

// Inverse of the mean map: theta with psi'(theta) = mu.
double mean_to_natural(const FamilySpec& family, double mu);
// psi(theta), log of the moment generating function of the base measure.
double cumulant_fn(const FamilySpec& family, double theta);
// psi'(theta), the mean of the tilted measure.
double cumulant_derivative(const FamilySpec& family, double theta);
// j-th cumulant (j >= 1) of the measure with mean mu.
double cumulant(const FamilySpec& family, double mu, int j);

class MeanParamMeasure {
 public:
  MeanParamMeasure(FamilySpec family, double mean);

  const FamilySpec& family() const { return family_; }
  double mean() const { return mean_; }
  double variance() const { return variance_fn(family_, mean_); }

  // Probability mass (discrete families, zero off the support) or density.
  double density(double x) const;

 private:
  FamilySpec family_;
  double mean_;
};

// i.i.d. draws. The sech family at mean 0 uses the inverse CDF
// x = (2/pi) log tan(pi u / 2); other sech means use rejection from an
// asymmetric Laplace envelope (acceptance ratio 1 / (1 + exp(-pi |x|))).
std::vector<double> sample(const MeanParamMeasure& measure, Rng& rng, std::size_t count);
double sample_one(const MeanParamMeasure& measure, Rng& rng);

// Draw from (1/2) sech(pi x / 2) by inverse CDF.
double sample_sech_standard(Rng& rng);

// Uniform on the open interval (0, 1).
inline double open_unit(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace nefqvf
