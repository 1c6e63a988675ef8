#include "nefqvf/meixner_series.hpp"

#include <cmath>
#include <string>

#include "nefqvf/errors.hpp"

namespace nefqvf {

TranslationPolyTable build_translation_table(int K) {
  if (K < 0) throw DomainError("translation table: K must be non-negative");
  if (K > kMaxTranslationDegree) throw CapExceeded("translation table: K exceeds the cap of 200");
  const auto n = static_cast<std::size_t>(K) + 1;

  // arctan t = sum_j (-1)^j t^{2j+1} / (2j+1)
  std::vector<mpq_class> atan(n, mpq_class(0));
  for (std::size_t d = 1; d < n; d += 2) {
    atan[d] = mpq_class(((d / 2) % 2 == 0) ? 1 : -1, static_cast<unsigned long>(d));
  }

  TranslationPolyTable table;
  table.exact_.assign(n, {});
  for (std::size_t k = 0; k < n; ++k) table.exact_[k].assign(k + 1, mpq_class(0));
  table.exact_[0][0] = 1;

  // power = (arctan t)^l truncated at t^K; starts at t^l.
  std::vector<mpq_class> power(n, mpq_class(0));
  power[0] = 1;
  mpq_class factorial(1);
  for (std::size_t l = 1; l < n; ++l) {
    std::vector<mpq_class> next(n, mpq_class(0));
    for (std::size_t i = l - 1; i < n; ++i) {
      if (power[i] == 0) continue;
      for (std::size_t d = 1; i + d < n; d += 2) next[i + d] += power[i] * atan[d];
    }
    power = std::move(next);
    factorial *= static_cast<unsigned long>(l);
    for (std::size_t k = l; k < n; ++k) {
      if (power[k] == 0) continue;
      mpq_class c = power[k] / factorial;
      c.canonicalize();
      table.exact_[k][l] = c;
    }
  }

  table.approx_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& c : table.exact_[k]) table.approx_[k].push_back(c.get_d());
  }
  return table;
}

namespace {

void check_k(const TranslationPolyTable& table, int k) {
  if (k < 0 || k > table.max_degree())
    throw DomainError("tau_hat: degree " + std::to_string(k) + " outside [0, " +
                      std::to_string(table.max_degree()) + "]");
}

}  // namespace

const std::vector<mpq_class>& TranslationPolyTable::exact_coeffs(int k) const {
  check_k(*this, k);
  return exact_[static_cast<std::size_t>(k)];
}

const std::vector<double>& TranslationPolyTable::coeffs(int k) const {
  check_k(*this, k);
  return approx_[static_cast<std::size_t>(k)];
}

double tau_hat_eval(const TranslationPolyTable& table, int k, double x) {
  const auto& c = table.coeffs(k);
  // Only powers of parity k occur: Horner in x^2.
  const double x2 = x * x;
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    if ((i % 2) != (static_cast<std::size_t>(k) % 2)) continue;
    acc = acc * x2 + c[i];
  }
  return (k % 2 == 1) ? acc * x : acc;
}

double tau_value_bound(int k, double x) {
  if (k < 1) throw DomainError("tau_value_bound: k must be >= 1");
  if (!(x > 0.0)) throw DomainError("tau_value_bound: x must be positive");
  const double ek = std::exp(1.0) * k;
  const double growth = std::pow(ek, 2.0 * x);
  if (k % 2 == 1) return x * growth / k;
  return x * x * (2.0 * std::log(ek) / k) * growth;
}

double tau_coeff_bound(int k, int l) {
  if (k < 1 || l < 0) throw DomainError("tau_coeff_bound: need k >= 1 and l >= 0");
  return std::pow(2.0 * std::log(std::exp(1.0) * k), l - 1) / (k * std::tgamma(l + 1.0));
}

}  // namespace nefqvf
