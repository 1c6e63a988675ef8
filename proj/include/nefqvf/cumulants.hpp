#pragma once

#include <cstddef>
#include <vector>

namespace nefqvf {

// Cumulants of a QVF family as polynomials in the mean:
// kappa_1(mu) = mu, kappa_{j+1}(mu) = V(mu) * d kappa_j / d mu.
// Entry j (1-based, entry 0 unused) holds the ascending coefficients of kappa_j.
template <class T>
std::vector<std::vector<T>> cumulant_polynomials(const T& v0, const T& v1, const T& v2,
                                                 int count) {
  std::vector<std::vector<T>> kappa(static_cast<std::size_t>(count) + 1);
  if (count < 1) return kappa;
  kappa[1] = {T(0), T(1)};
  for (int j = 1; j < count; ++j) {
    const auto& prev = kappa[static_cast<std::size_t>(j)];
    std::vector<T> deriv;
    for (std::size_t i = 1; i < prev.size(); ++i) deriv.push_back(prev[i] * T(static_cast<long>(i)));
    std::vector<T> next(deriv.size() + 2, T(0));
    for (std::size_t i = 0; i < deriv.size(); ++i) {
      next[i] += v0 * deriv[i];
      next[i + 1] += v1 * deriv[i];
      next[i + 2] += v2 * deriv[i];
    }
    kappa[static_cast<std::size_t>(j) + 1] = std::move(next);
  }
  return kappa;
}

template <class T>
T eval_poly(const std::vector<T>& coeffs, const T& x) {
  T acc(0);
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

// Raw moments m_0..m_{max_order} from cumulants kappa[1..max_order] via
// m_n = sum_{k=0}^{n-1} C(n-1, k) kappa_{k+1} m_{n-1-k}.
template <class T>
std::vector<T> moments_from_cumulants(const std::vector<T>& kappa, int max_order) {
  std::vector<T> m(static_cast<std::size_t>(max_order) + 1, T(0));
  m[0] = T(1);
  // Pascal row n-1, updated in place.
  std::vector<T> binom{T(1)};
  for (int n = 1; n <= max_order; ++n) {
    T acc(0);
    for (int k = 0; k <= n - 1; ++k) {
      acc += binom[static_cast<std::size_t>(k)] * kappa[static_cast<std::size_t>(k) + 1] *
             m[static_cast<std::size_t>(n - 1 - k)];
    }
    m[static_cast<std::size_t>(n)] = acc;
    std::vector<T> next(binom.size() + 1, T(1));
    for (std::size_t i = 1; i < binom.size(); ++i) next[i] = binom[i - 1] + binom[i];
    binom = std::move(next);
  }
  return m;
}

}  // namespace nefqvf
