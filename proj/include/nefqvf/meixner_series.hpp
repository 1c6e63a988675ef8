#pragma once

// Translation polynomials of the sech family at mean 0:
//   sum_k t^k tau_hat_k(y) = exp(y arctan t),
// so [y^l] tau_hat_k = (1/l!) [t^k] (arctan t)^l.

#include <gmpxx.h>

#include <vector>

namespace nefqvf {

inline constexpr int kMaxTranslationDegree = 200;
inline constexpr int kDefaultTranslationDegree = 64;

class TranslationPolyTable {
 public:
  int max_degree() const { return static_cast<int>(exact_.size()) - 1; }

  // Ascending coefficients in y, length k + 1.
  const std::vector<mpq_class>& exact_coeffs(int k) const;
  const std::vector<double>& coeffs(int k) const;

 private:
  friend TranslationPolyTable build_translation_table(int K);
  std::vector<std::vector<mpq_class>> exact_;
  std::vector<std::vector<double>> approx_;
};

// Throws CapExceeded for K > 200.
TranslationPolyTable build_translation_table(int K = kDefaultTranslationDegree);

// tau_hat_k(x; 0). Throws DomainError when k is outside [0, K].
double tau_hat_eval(const TranslationPolyTable& table, int k, double x);

// Pointwise bound on |tau_hat_k(x)| for k >= 1, x > 0:
//   odd k:  x (1/k) (ek)^{2x}
//   even k: x^2 (2 log(ek) / k) (ek)^{2x}
double tau_value_bound(int k, double x);

// Bound on |[y^l] tau_hat_k| for k >= 1: (2 log(ek))^{l-1} / (k l!).
double tau_coeff_bound(int k, int l);

}  // namespace nefqvf
