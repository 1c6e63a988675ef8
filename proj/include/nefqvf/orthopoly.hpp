#pragma once

// Monic orthogonal polynomials p_k(y; mu0) of the mean-parametrized QVF
// families, their normalized versions, the constants
//   a_hat_k(v) = prod_{j<k} (1 + v j),   a_k(v) = k! a_hat_k(v),
// and the generating function f(t; v) = sum_k a_hat_k(v) t^k / k!, which is
// e^t for v = 0 and (1 - v t)^{-1/v} otherwise.

#include <gmpxx.h>

#include <string>
#include <vector>

#include "nefqvf/families.hpp"

namespace nefqvf {

// Degree bound D in N or +infinity.
class Degree {
 public:
  static Degree finite(int d);
  static Degree infinite() { return Degree(-1); }

  bool is_infinite() const { return value_ < 0; }
  // Only meaningful when finite.
  int value() const { return value_; }
  std::string str() const { return is_infinite() ? "inf" : std::to_string(value_); }

  friend bool operator==(const Degree&, const Degree&) = default;

 private:
  explicit Degree(int v) : value_(v) {}
  int value_;
};

// Parses "inf" or a non-negative integer.
Degree parse_degree(const std::string& text);

double a_hat(int k, double v);
double a_norm(int k, double v);

// f(t; v). Returns +inf when v > 0 and t >= 1/v. For v = -1/m the series
// terminates and this is (1 + t/m)^m for every t.
double f_eval(double t, double v);

// Polynomial c_0 + c_1 t + ... + c_D t^D.
class TruncSeries {
 public:
  explicit TruncSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double operator()(double t) const;

 private:
  std::vector<double> coeffs_;
};

// Order-D Taylor polynomial of f(.; v): c_k = a_hat_k(v) / k!.
TruncSeries f_trunc(int D, double v);

// f^{<=D}(t; v), with D = inf meaning f itself.
double f_leq(double t, double v, Degree D);

inline constexpr int kMaxBasisDegree = 40;
inline constexpr int kMaxExactBasisDegree = 12;
// Evaluations carry an absolute error of at most about this times
// max(|p_hat_k(y)|, 1) in normalized units.
inline constexpr double kRecurrenceTolerance = 1e-11;

class OrthoPolyBasis {
 public:
  const FamilySpec& family() const { return family_; }
  double null_mean() const { return mu0_; }
  // Requested maximum degree K.
  int max_degree() const { return requested_; }
  // Highest non-degenerate degree (K, or m for binomial{m} when m < K).
  int top_degree() const { return static_cast<int>(std_norms_.size()) - 1; }

  // Ascending coefficients of p_k in y; p_k is monic of degree k.
  const std::vector<double>& monic_coeffs(int k) const;
  // E[p_k^2] = a_k(v2) V(mu0)^k.
  double squared_norm(int k) const;

  double eval_monic(int k, double y) const;
  double eval_normalized(int k, double y) const;

 private:
  friend OrthoPolyBasis build_basis(const FamilySpec&, double, int);
  OrthoPolyBasis(FamilySpec family, double mu0) : family_(family), mu0_(mu0) {}

  void check_degree(int k) const;
  // q_k((y - mu0) / scale) by its three-term recurrence, or from the exact
  // coefficients when the recurrence's error bound is too large.
  double eval_standard(int k, double y) const;

  FamilySpec family_;
  double mu0_;
  int requested_ = 0;
  double variance_ = 1.0;
  double scale_ = 1.0;  // sqrt(V(mu0))
  // q_k(w) with w = (y - mu0) / scale is monic with p_k(y) = scale^k q_k(w).
  std::vector<std::vector<double>> monic_;
  std::vector<double> std_norms_;  // a_k(v2)
  std::vector<double> alpha_, beta_;  // recurrence coefficients of q_k; beta_[k-1] is beta_k
  std::vector<std::vector<mpq_class>> centered_;  // exact p_k in u = y - mu0
};

// Gram-Schmidt on the moments of the measure with mean mu0 (moments from
// the cumulant recursion). Throws NumericInstability when a squared norm
// differs from a_k(v2) V(mu0)^k (the check is exact), CapExceeded
// for K > 40.
OrthoPolyBasis build_basis(const FamilySpec& family, double mu0, int K);

// Normalized polynomial p_hat_k(y; mu0). Throws DegenerateDegree when
// a_k(v2) = 0 and DomainError when k is outside [0, K].
double normalized_eval(const OrthoPolyBasis& basis, int k, double y);

// Exact-rational variant, coefficients in y directly.
struct ExactOrthoPolyBasis {
  FamilyKind kind;
  mpq_class parameter;
  mpq_class null_mean;
  mpq_class v0, v1, v2;
  std::vector<std::vector<mpq_class>> monic;  // ascending coefficients
  std::vector<mpq_class> squared_norms;
};

// Family parameter given as a rational (sigma2, alpha, or m; ignored for
// poisson and sech). K <= 12.
ExactOrthoPolyBasis build_basis_exact(FamilyKind kind, const mpq_class& parameter,
                                      const mpq_class& mu0, int K);

mpq_class a_hat_exact(int k, const mpq_class& v);

}  // namespace nefqvf
