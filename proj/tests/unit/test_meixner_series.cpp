#include "doctest.h"

#include <cmath>
#include <vector>

#include "nefqvf/errors.hpp"
#include "nefqvf/families.hpp"
#include "nefqvf/ldlr.hpp"
#include "nefqvf/meixner_series.hpp"

using namespace nefqvf;

namespace {

// g_k(y) = [t^k] exp(y arctan t) satisfies (k+1) g_{k+1} = y g_k - (k-1) g_{k-1},
// from (1 + t^2) G' = y G.
std::vector<std::vector<mpq_class>> recurrence_oracle(int K) {
  std::vector<std::vector<mpq_class>> g(K + 1);
  g[0] = {mpq_class(1)};
  if (K >= 1) g[1] = {mpq_class(0), mpq_class(1)};
  for (int k = 1; k < K; ++k) {
    std::vector<mpq_class> next(k + 2, mpq_class(0));
    for (int l = 0; l <= k; ++l) next[l + 1] += g[k][l];
    for (std::size_t l = 0; l < g[k - 1].size(); ++l) next[l] -= mpq_class(k - 1) * g[k - 1][l];
    for (auto& c : next) c /= k + 1;
    g[k + 1] = std::move(next);
  }
  return g;
}

}  // namespace

TEST_CASE("low-degree translation polynomials") {
  auto t = build_translation_table(6);
  CHECK(t.max_degree() == 6);
  const auto& c3 = t.exact_coeffs(3);
  REQUIRE(c3.size() == 4);
  CHECK(c3[0] == 0);
  CHECK(c3[1] == mpq_class(-1, 3));
  CHECK(c3[2] == 0);
  CHECK(c3[3] == mpq_class(1, 6));
  CHECK(tau_hat_eval(t, 0, 5.0) == 1.0);
  CHECK(tau_hat_eval(t, 1, 0.3) == doctest::Approx(0.3));
  CHECK(tau_hat_eval(t, 2, 0.3) == doctest::Approx(0.045));
  CHECK(tau_hat_eval(t, 3, 1.0) == doctest::Approx(-1.0 / 6.0));
  CHECK(tau_hat_eval(t, 2, 0.0) == 0.0);
  CHECK(tau_value_bound(1, 1.0) == doctest::Approx(std::exp(2.0)));
  CHECK(tau_value_bound(2, 0.5) == doctest::Approx(0.25 * std::log(2 * std::exp(1.0)) * 2 * std::exp(1.0)));
  CHECK(tau_value_bound(3, 1e-9) < 1e-8);
}

TEST_CASE("table matches the recurrence oracle") {
  const int K = 80;
  auto t = build_translation_table(K);
  auto g = recurrence_oracle(K);
  for (int k = 0; k <= K; ++k) {
    CAPTURE(k);
    const auto& c = t.exact_coeffs(k);
    REQUIRE(c.size() == static_cast<std::size_t>(k + 1));
    bool same = true;
    for (int l = 0; l <= k; ++l) same = same && c[l] == (l < static_cast<int>(g[k].size()) ? g[k][l] : 0);
    CHECK(same);
    // parity: only l with l = k mod 2 survive
    for (int l = 0; l <= k; ++l)
      if ((k - l) % 2) CHECK(c[l] == 0);
  }
}

TEST_CASE("generating function identity") {
  auto t = build_translation_table(120);
  for (double y : {-1.5, 0.4, 2.0}) {
    const double s = 0.3;
    double sum = 0.0;
    for (int k = 0; k <= 120; ++k) sum += std::pow(s, k) * tau_hat_eval(t, k, y);
    CHECK(sum == doctest::Approx(std::exp(y * std::atan(s))).epsilon(1e-13));
  }
}

TEST_CASE("coefficient and value bounds hold") {
  const int K = 60;
  auto t = build_translation_table(K);
  for (int k = 1; k <= K; ++k) {
    CAPTURE(k);
    const auto& c = t.coeffs(k);
    for (int l = 1; l <= k; ++l) CHECK(std::fabs(c[l]) <= tau_coeff_bound(k, l) * (1 + 1e-12));
    for (double x : {0.01, 0.1, 0.5, 1.0, 2.0})
      CHECK(std::fabs(tau_hat_eval(t, k, x)) <= tau_value_bound(k, x) * (1 + 1e-12));
  }
}

TEST_CASE("table caps") {
  CHECK_THROWS_AS(build_translation_table(kMaxTranslationDegree + 1), CapExceeded);
  auto t = build_translation_table(4);
  CHECK_THROWS_AS(tau_hat_eval(t, 5, 1.0), DomainError);
  CHECK_THROWS_AS(tau_hat_eval(t, -1, 1.0), DomainError);
}

TEST_CASE("translation polynomials are orthogonal components of the shifted sech law") {
  // With Z from the sech law, E[P_hat_k(x + Z)] = tau_hat_k(x).
  auto table = build_translation_table(4);
  auto basis = build_basis(FamilySpec::sech(), 0.0, 4);
  const double x = 0.6;
  const int n = 1000000;
  for (int k = 1; k <= 4; ++k) {
    MomentAccumulator acc;
    Rng r = make_stream(21, k);
    for (int i = 0; i < n; ++i) acc.add(basis.eval_normalized(k, x + sample_sech_standard(r)));
    CAPTURE(k);
    CHECK(std::fabs(acc.mean() - tau_hat_eval(table, k, x)) < 5 * acc.stderr_of_mean());
  }
}
