#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "nefqvf/errors.hpp"
#include "nefqvf/ldlr.hpp"

using namespace nefqvf;

namespace {

double ahat(int k, double v) {
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= 1.0 + v * j;
  return r;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

KinSpikedModel point_mass(FamilySpec f, double mu, double x) {
  return {f, {mu}, SpikePrior::from_atoms(SpikeKind::kKin, {{{x}, 1.0}})};
}

// Independent oracle: sum over every k in {0..D}^N with |k| <= D of the
// squared component, computed from the variance function directly.
double brute_norm(const KinSpikedModel& m, int D) {
  const std::size_t N = m.N();
  const auto& atoms = m.prior.atoms();
  const double v2 = m.family.v2();
  std::vector<int> k(N, 0);
  double total = 0.0;
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
    if (i == N) {
      double scale = 1.0;
      for (int ki : k) scale *= ahat(ki, v2) / factorial(ki);
      if (scale == 0.0) return;
      double e = 0.0;
      for (const auto& a : atoms) {
        double p = a.probability;
        for (std::size_t j = 0; j < N; ++j) {
          const double z = (a.x[j] - m.null_means[j]) / std::sqrt(variance_fn(m.family, m.null_means[j]));
          p *= std::pow(z, k[j]);
        }
        e += p;
      }
      total += scale * e * e;
      return;
    }
    for (int d = 0; d + used <= D; ++d) {
      k[i] = d;
      rec(i + 1, used + d);
    }
    k[i] = 0;
  };
  rec(0, 0);
  return total;
}

// E f^{<=D}(r; v) over independent atom pairs, r from the variance function.
double brute_overlap(const KinSpikedModel& m, int D, double v) {
  const auto& atoms = m.prior.atoms();
  double total = 0.0;
  for (const auto& a : atoms)
    for (const auto& b : atoms) {
      double r = 0.0;
      for (std::size_t j = 0; j < m.N(); ++j) {
        const double V = variance_fn(m.family, m.null_means[j]);
        r += (a.x[j] - m.null_means[j]) * (b.x[j] - m.null_means[j]) / V;
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

KinSpikedModel random_model(FamilySpec f, Rng& rng, double lo, double hi) {
  std::uniform_int_distribution<int> nd(1, 3), ad(1, 4);
  std::uniform_real_distribution<double> u(lo, hi);
  const int N = nd(rng), A = ad(rng);
  std::vector<double> mus(N);
  for (auto& mu : mus) mu = u(rng);
  std::vector<SpikeAtom> atoms(A);
  double total = 0.0;
  for (auto& a : atoms) {
    a.x.resize(N);
    for (auto& x : a.x) x = u(rng);
    a.probability = 0.1 + std::uniform_real_distribution<double>(0, 1)(rng);
    total += a.probability;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) acc += (atoms[i].probability /= total);
  atoms.back().probability = 1.0 - acc;
  return {f, mus, SpikePrior::from_atoms(SpikeKind::kKin, atoms)};
}

}  // namespace

TEST_CASE("component fixtures") {
  auto g = point_mass(FamilySpec::gaussian(), 0.0, 0.7);
  CHECK(component(g, {0}) == 1.0);
  CHECK(component(g, {1}) == doctest::Approx(0.7));
  auto bern = point_mass(FamilySpec::binomial(1), 0.5, 0.75);
  CHECK(component(bern, {1}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(component(bern, {2}), DegenerateDegree);
  CHECK_THROWS_AS(component(bern, {1, 0}), DomainError);
}

TEST_CASE("exact norm fixtures") {
  auto bern = point_mass(FamilySpec::binomial(1), 0.5, 0.75);
  CHECK(ldlr_exact(bern, 0).value == 1.0);
  CHECK(ldlr_exact(bern, 1).value == doctest::Approx(1.25));
  CHECK(ldlr_exact(bern, 9).value == doctest::Approx(1.25));
  // direct E_Q[(P/Q)^2] for the two-point law
  CHECK(0.75 * 0.75 / 0.5 + 0.25 * 0.25 / 0.5 == doctest::Approx(1.25));
  CHECK(ldlr_full(bern).value == doctest::Approx(1.25));
  for (double s : {0.3, 1.0}) {
    auto g = point_mass(FamilySpec::gaussian(), 0.0, s);
    CHECK(ldlr_exact(g, 40).value == doctest::Approx(std::exp(s * s)).epsilon(1e-12));
    CHECK(ldlr_full(g).value == doctest::Approx(std::exp(s * s)).epsilon(1e-12));
  }
}

TEST_CASE("exact norm agrees with the brute-force oracle on random instances") {
  Rng rng = make_stream(5, 0);
  struct Fam {
    FamilySpec f;
    double lo, hi;
  };
  const Fam fams[] = {{FamilySpec::gaussian(), -1, 1},         {FamilySpec::poisson(), 0.3, 2},
                      {FamilySpec::gamma(1.0), 0.3, 2},         {FamilySpec::binomial(1), 0.1, 0.9},
                      {FamilySpec::binomial(2), 0.2, 1.8},      {FamilySpec::negative_binomial(2), 0.2, 2},
                      {FamilySpec::sech(), -1, 1}};
  for (const auto& fam : fams)
    for (int t = 0; t < 8; ++t) {
      auto m = random_model(fam.f, rng, fam.lo, fam.hi);
      const int D = 1 + t % 4;
      CAPTURE(fam.f.tag());
      CAPTURE(D);
      const double expected = brute_norm(m, D);
      CHECK(ldlr_exact(m, D).value == doctest::Approx(expected).epsilon(1e-11));
    }
}

TEST_CASE("equality and bound directions of the overlap bound") {
  Rng rng = make_stream(6, 0);
  for (int t = 0; t < 30; ++t) {
    const int D = t % 5;
    auto g = random_model(t % 2 ? FamilySpec::gaussian() : FamilySpec::poisson(), rng, 0.2, 1.5);
    CHECK(ldlr_exact(g, D).value == doctest::Approx(brute_overlap(g, D, 0.0)).epsilon(1e-12));
    CHECK(overlap_bound_exact(g, Degree::finite(D), 0.0).value ==
          doctest::Approx(brute_overlap(g, D, 0.0)).epsilon(1e-12));

    auto gam = random_model(FamilySpec::gamma(1.0), rng, 0.2, 1.5);
    CHECK(ldlr_exact(gam, D).value <= brute_overlap(gam, D, 1.0) + 1e-10);

    auto bern = random_model(FamilySpec::binomial(1), rng, 0.1, 0.9);
    const double val = ldlr_exact(bern, D).value;
    CHECK(brute_overlap(bern, D, -1.0) - 1e-10 <= val);
    CHECK(val <= brute_overlap(bern, D, 0.0) + 1e-10);
  }
}

TEST_CASE("norm is non-decreasing in D") {
  Rng rng = make_stream(7, 0);
  auto m = random_model(FamilySpec::negative_binomial(1), rng, 0.3, 2.0);
  const auto by = ldlr_exact_by_degree(m, 8);
  CHECK(by.front() == 1.0);
  for (std::size_t d = 1; d < by.size(); ++d) CHECK(by[d] >= by[d - 1]);
  CHECK(by.back() == ldlr_exact(m, 8).value);
}

TEST_CASE("full norm matches direct summation of P^2/Q") {
  struct Case {
    FamilySpec f;
    double mu, x1, x2, p;
  };
  const Case cases[] = {{FamilySpec::poisson(), 1.0, 1.6, 0.5, 0.3},
                        {FamilySpec::binomial(3), 1.5, 2.0, 0.8, 0.6},
                        {FamilySpec::negative_binomial(2), 1.0, 1.3, 0.6, 0.5}};
  for (const auto& c : cases) {
    CAPTURE(c.f.tag());
    MeanParamMeasure q(c.f, c.mu), a(c.f, c.x1), b(c.f, c.x2);
    double direct = 0.0;
    for (int y = 0; y < 2000; ++y) {
      const double qy = q.density(y);
      if (qy <= 0.0) continue;
      const double py = c.p * a.density(y) + (1 - c.p) * b.density(y);
      direct += py * py / qy;
    }
    KinSpikedModel m{c.f, {c.mu}, SpikePrior::from_atoms(SpikeKind::kKin, {{{c.x1}, c.p}, {{c.x2}, 1 - c.p}})};
    CHECK(ldlr_full(m).value == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("multi-index count") {
  auto brute = [](int N, int D, int kmax) {
    long count = 0;
    std::vector<int> k(N, 0);
    std::function<void(int, int)> rec = [&](int i, int used) {
      if (i == N) {
        ++count;
        return;
      }
      for (int d = 0; d <= kmax && d + used <= D; ++d) {
        k[i] = d;
        rec(i + 1, used + d);
      }
    };
    rec(0, 0);
    return static_cast<double>(count);
  };
  for (int N = 1; N <= 4; ++N)
    for (int D = 0; D <= 5; ++D)
      for (int kmax : {1, 2, 5}) CHECK(multi_index_count(N, D, kmax) == brute(N, D, kmax));
  std::vector<double> mus(60, 1.0);
  KinSpikedModel big{FamilySpec::poisson(), mus,
                     SpikePrior::from_atoms(SpikeKind::kKin, {{std::vector<double>(60, 1.5), 1.0}})};
  CHECK_THROWS_AS(ldlr_exact(big, 10), CapExceeded);
}

TEST_CASE("additive fixtures") {
  auto table = build_translation_table(10);
  auto model = [](double x) {
    return AdditiveSpikedModel{FamilySpec::sech(), {0.0},
                               SpikePrior::from_atoms(SpikeKind::kAdditive, {{{x}, 1.0}})};
  };
  CHECK(ldlr_exact_additive(model(0.5), 0, table).value == 1.0);
  for (int D = 0; D <= 6; ++D) CHECK(ldlr_exact_additive(model(0.0), D, table).value == 1.0);
  CHECK(ldlr_exact_additive(model(0.5), 2, table).value == doctest::Approx(1.265625));
  CHECK_THROWS_AS(ldlr_exact_additive(model(0.5), 11, table), CapExceeded);
  AdditiveSpikedModel bad{FamilySpec::gaussian(), {0.0},
                          SpikePrior::from_atoms(SpikeKind::kAdditive, {{{0.5}, 1.0}})};
  CHECK_THROWS_AS(ldlr_exact_additive(bad, 2, table), DomainError);
}

TEST_CASE("monte carlo overlap bound") {
  SUBCASE("point mass is deterministic") {
    auto m = point_mass(FamilySpec::poisson(), 1.0, 1.5);
    const auto rows = overlap_bound_mc(m, Degree::finite(3), 1000, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].value == doctest::Approx(f_leq(0.25, 0.0, Degree::finite(3))));
    CHECK(rows[0].stderr_ == doctest::Approx(0.0).scale(1e-12));
  }
  SUBCASE("zero overlap gives one") {
    auto m = point_mass(FamilySpec::binomial(1), 0.4, 0.4);
    const auto rows = overlap_bound_mc(m, Degree::infinite(), 100, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == 1.0);
    CHECK(rows[1].value == 1.0);
    CHECK(rows[1].v == 0.0);
  }
  SUBCASE("gaussian equality case") {
    Rng rng = make_stream(8, 0);
    auto m = random_model(FamilySpec::gaussian(), rng, -1.0, 1.0);
    const auto rows = overlap_bound_mc(m, Degree::finite(4), 200000, 2);
    CHECK(std::fabs(rows[0].value - ldlr_exact(m, 4).value) < 4 * rows[0].stderr_ + 1e-12);
  }
  SUBCASE("divergence propagates") {
    auto m = point_mass(FamilySpec::gamma(1.0), 1.0, 2.5);  // z = 1.5, r = 2.25 >= 1
    const auto rows = overlap_bound_mc(m, Degree::infinite(), 10, 1);
    CHECK(std::isinf(rows[0].value));
  }
  SUBCASE("worker count does not change the estimate") {
    KinSpikedModel m{FamilySpec::poisson(), {1.0, 1.0},
                     SpikePrior::from_sampler(
                         SpikeKind::kKin, 2,
                         [](Rng& r, std::vector<double>& x) {
                           for (auto& v : x) v = 0.5 + open_unit(r);
                         },
                         "uniform")};
    const auto a = overlap_bound_mc(m, Degree::finite(3), 20000, 4, 1);
    const auto b = overlap_bound_mc(m, Degree::finite(3), 20000, 4, 3);
    CHECK(a[0].value == b[0].value);
  }
}

TEST_CASE("channel comparison") {
  // Shared z-score atoms mapped into each family at a family-specific mean.
  const std::vector<double> zs = {0.6, -0.4};
  const std::vector<double> ps = {0.3, 0.7};
  auto build = [&](FamilySpec f, double mu) {
    const double s = std::sqrt(variance_fn(f, mu));
    std::vector<SpikeAtom> atoms;
    for (std::size_t a = 0; a < zs.size(); ++a) atoms.push_back({{mu + s * zs[a]}, ps[a]});
    return KinSpikedModel{f, {mu}, SpikePrior::from_atoms(SpikeKind::kKin, atoms)};
  };
  const auto rows = channel_compare(
      {build(FamilySpec::gamma(1.0), 2.0), build(FamilySpec::binomial(1), 0.5),
       build(FamilySpec::gaussian(), 0.0), build(FamilySpec::poisson(), 3.0)},
      6);
  REQUIRE(rows.size() == 4);
  CHECK(rows.front().family == FamilySpec::binomial(1));
  CHECK(rows.back().family == FamilySpec::gamma(1.0));
  CHECK(non_decreasing_in_v2(rows));
  CHECK(rows[1].result.value == doctest::Approx(rows[2].result.value).epsilon(1e-12));

  CHECK(channel_compare({build(FamilySpec::poisson(), 1.0)}, 3).size() == 1);
  CHECK_THROWS_AS(channel_compare({point_mass(FamilySpec::binomial(1), 0.5, 0.75),
                                   point_mass(FamilySpec::gaussian(), 0.5, 0.75)},
                                  3),
                  DomainError);
}

TEST_CASE("block model overlap") {
  CHECK(sbm_overlap(2, 3, 1, {1, 1}, {1, -1}) == doctest::Approx(-0.25));
  CHECK(sbm_overlap(5, 3, 1, {1, -1, 1, 1, -1}, {1, -1, 1, 1, -1}) == doctest::Approx(0.25 * 4));
  CHECK(sbm_overlap(4, 2, 2, {1, 1, 1, 1}, {1, -1, 1, -1}) == 0.0);
  CHECK_THROWS_AS(sbm_overlap(3, 3, 1, {1, 1}, {1, 1, 1}), DomainError);

  // The z-overlap of the Poisson block model equals the closed form.
  const int n = 6;
  auto m = make_sbm_model(n, 3.0, 1.0, FamilySpec::poisson());
  const std::vector<int> s1 = {1, 1, -1, 1, -1, -1}, s2 = {1, -1, -1, 1, 1, -1};
  auto edges = [&](const std::vector<int>& s) {
    std::vector<double> x;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) x.push_back(s[i] == s[j] ? 3.0 / n : 1.0 / n);
    return x;
  };
  CHECK(z_overlap(m, edges(s1), edges(s2)) == doctest::Approx(sbm_overlap(n, 3, 1, s1, s2)));
  CHECK_THROWS_AS(make_sbm_model(n, 3.0, 1.0, FamilySpec::gamma(1.0)), DomainError);
}

TEST_CASE("block model scan estimates") {
  CHECK(sbm_ks_exact(50, 2.0, 2.0, 20) == doctest::Approx(1.0));
  for (auto est : {KsEstimator::kTilted, KsEstimator::kPlain})
    for (auto [a, b] : {std::pair{3.0, 1.0}, std::pair{7.5, 1.5}}) {
      const int n = 100;
      const auto row = sbm_ks_estimate(n, a, b, 20, 200000, 3, est);
      const double exact = sbm_ks_exact(n, a, b, 20);
      CAPTURE(a);
      if (est == KsEstimator::kTilted || a < 5)
        CHECK(std::fabs(row.value - exact) < 4 * row.stderr_);
      CHECK(row.ks_ratio == doctest::Approx((a - b) * (a - b) / (2 * (a + b))));
    }
  const auto rows = sbm_ks_scan({50, 100}, {{3.0, 1.0}, {5.0, 1.0}}, 10, 1000, 9);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].n == 50);
  CHECK(rows[3].a == 5.0);
}
