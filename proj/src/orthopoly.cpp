#include "nefqvf/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nefqvf/cumulants.hpp"
#include "nefqvf/errors.hpp"

namespace nefqvf {

Degree Degree::finite(int d) {
  if (d < 0) throw DomainError("degree must be non-negative");
  return Degree(d);
}

Degree parse_degree(const std::string& text) {
  if (text == "inf" || text == "infinity") return Degree::infinite();
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError("degree: expected a non-negative integer or 'inf', got '" + text + "'");
  }
  if (pos != text.size() || v < 0 || v > 1000000)
    throw ConfigError("degree: expected a non-negative integer or 'inf', got '" + text + "'");
  return Degree::finite(static_cast<int>(v));
}

namespace {

void require_v(double v) {
  if (!in_v2_set(v)) {
    std::ostringstream os;
    os << "v = " << v << " is not in [0, inf) or {-1/m}";
    throw DomainError(os.str());
  }
}

}  // namespace

double a_hat(int k, double v) {
  require_v(v);
  if (k < 0) throw DomainError("a_hat: k must be non-negative");
  double acc = 1.0;
  for (int j = 0; j < k; ++j) acc *= 1.0 + v * j;
  return acc == 0.0 ? 0.0 : acc;  // avoid -0
}

double a_norm(int k, double v) { return std::tgamma(k + 1.0) * a_hat(k, v); }

double f_eval(double t, double v) {
  require_v(v);
  if (v == 0.0) return std::exp(t);
  if (v > 0.0) {
    if (t >= 1.0 / v) return std::numeric_limits<double>::infinity();
    return std::exp(-std::log1p(-v * t) / v);
  }
  const double m = std::round(-1.0 / v);
  return std::pow(1.0 + t / m, m);
}

double TruncSeries::operator()(double t) const {
  double acc = 0.0;
  for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * t + coeffs_[i];
  return acc;
}

TruncSeries f_trunc(int D, double v) {
  require_v(v);
  if (D < 0) throw DomainError("f_trunc: D must be non-negative");
  std::vector<double> c(static_cast<std::size_t>(D) + 1);
  c[0] = 1.0;
  for (int k = 1; k <= D; ++k) {
    const double next = c[static_cast<std::size_t>(k) - 1] * (1.0 + v * (k - 1)) / k;
    c[static_cast<std::size_t>(k)] = next == 0.0 ? 0.0 : next;
  }
  return TruncSeries(std::move(c));
}

double f_leq(double t, double v, Degree D) {
  if (D.is_infinite()) return f_eval(t, v);
  return f_trunc(D.value(), v)(t);
}

// ---------------------------------------------------------------------------
// Gram-Schmidt on moments.

namespace {

template <class T>
T inner(const std::vector<T>& a, const std::vector<T>& b, const std::vector<T>& moments) {
  T acc(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == T(0)) continue;
    for (std::size_t j = 0; j < b.size(); ++j) acc += a[i] * b[j] * moments[i + j];
  }
  return acc;
}

// Orthogonalizes x * q_{k-1} against q_0..q_{k-1}. `passes` > 1 repeats the
// projection (classical Gram-Schmidt with re-orthogonalization).
template <class T>
std::vector<T> next_orthogonal(const std::vector<std::vector<T>>& q, const std::vector<T>& norms,
                               const std::vector<T>& moments, int passes) {
  const auto& prev = q.back();
  std::vector<T> r(prev.size() + 1, T(0));
  for (std::size_t i = 0; i < prev.size(); ++i) r[i + 1] = prev[i];
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      const T c = inner(r, q[j], moments) / norms[j];
      for (std::size_t i = 0; i < q[j].size(); ++i) r[i] -= c * q[j][i];
    }
  }
  return r;
}

// Exact Gram-Schmidt on the central moments E (y - mu0)^n. Returns the
// ascending coefficients of p_k in u = y - mu0 and stops at the first k with
// a_k(v2) = 0.
std::vector<std::vector<mpq_class>> centered_basis(const mpq_class& v0, const mpq_class& v1,
                                                   const mpq_class& v2, const mpq_class& mu0,
                                                   int K) {
  const int order = 2 * K + 2;
  const auto kappa_poly = cumulant_polynomials<mpq_class>(v0, v1, v2, order);
  std::vector<mpq_class> kappa(static_cast<std::size_t>(order) + 1, mpq_class(0));
  for (int j = 2; j <= order; ++j)
    kappa[static_cast<std::size_t>(j)] = eval_poly(kappa_poly[static_cast<std::size_t>(j)], mu0);
  const auto moments = moments_from_cumulants(kappa, order);

  const mpq_class variance = v0 + v1 * mu0 + v2 * mu0 * mu0;
  std::vector<std::vector<mpq_class>> q{{mpq_class(1)}};
  std::vector<mpq_class> norms{mpq_class(1)};
  mpq_class factorial(1);
  mpq_class var_pow(1);
  for (int k = 1; k <= K; ++k) {
    factorial *= k;
    var_pow *= variance;
    mpq_class expected = factorial * a_hat_exact(k, v2) * var_pow;
    expected.canonicalize();
    if (expected == 0) break;
    auto r = next_orthogonal(q, norms, moments, 1);
    for (auto& c : r) c.canonicalize();
    mpq_class norm = inner(r, r, moments);
    norm.canonicalize();
    if (norm != expected)
      throw NumericInstability("orthogonal basis: squared norm differs from a_k(v2) V^k");
    q.push_back(std::move(r));
    norms.push_back(expected);
  }
  return q;
}

// V(mu) = v0 + v1 mu + v2 mu^2 with rational coefficients derived from the
// family parameter, so that a_k(v2) vanishes exactly for binomial degrees > m.
void exact_variance_coefficients(FamilyKind kind, const mpq_class& parameter, const mpq_class& mu0,
                                 mpq_class& v0, mpq_class& v1, mpq_class& v2) {
  v0 = 0;
  v1 = 0;
  v2 = 0;
  auto positive_integer = [&](const char* what) {
    if (parameter.get_den() != 1 || parameter < 1)
      throw DomainError(std::string(what) + ": m must be a positive integer");
  };
  switch (kind) {
    case FamilyKind::kGaussian:
      if (parameter <= 0) throw DomainError("gaussian: sigma2 must be positive");
      v0 = parameter;
      break;
    case FamilyKind::kPoisson:
      v1 = 1;
      if (mu0 <= 0) throw DomainError("poisson: mean must be positive");
      break;
    case FamilyKind::kGamma:
      if (parameter <= 0) throw DomainError("gamma: alpha must be positive");
      if (mu0 <= 0) throw DomainError("gamma: mean must be positive");
      v2 = 1 / parameter;
      break;
    case FamilyKind::kBinomial:
      positive_integer("binomial");
      if (mu0 <= 0 || mu0 >= parameter) throw DomainError("binomial: mean must lie in (0, m)");
      v1 = 1;
      v2 = -1 / parameter;
      break;
    case FamilyKind::kNegBinomial:
      positive_integer("negbinomial");
      if (mu0 <= 0) throw DomainError("negbinomial: mean must be positive");
      v1 = 1;
      v2 = 1 / parameter;
      break;
    case FamilyKind::kSechR1:
      v0 = 1;
      v2 = 1;
      break;
  }
  v0.canonicalize();
  v1.canonicalize();
  v2.canonicalize();
}

// Coefficients of p(y) from those of p(mu0 + u), i.e. expansion of (y - mu0)^i.
std::vector<mpq_class> shift_to_y(const std::vector<mpq_class>& centered, const mpq_class& mu0) {
  std::vector<mpq_class> out(centered.size(), mpq_class(0));
  // row[j] = C(i, j) (-mu0)^{i-j}, advanced one power of (y - mu0) at a time
  std::vector<mpq_class> row{mpq_class(1)};
  for (std::size_t i = 0; i < centered.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) out[j] += centered[i] * row[j];
    std::vector<mpq_class> next(row.size() + 1, mpq_class(0));
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j + 1] += row[j];
      next[j] -= mu0 * row[j];
    }
    row = std::move(next);
  }
  for (auto& c : out) c.canonicalize();
  return out;
}

}  // namespace

OrthoPolyBasis build_basis(const FamilySpec& family, double mu0, int K) {
  if (K < 0) throw DomainError("build_basis: K must be non-negative");
  if (K > kMaxBasisDegree) throw CapExceeded("build_basis: K exceeds the cap of 40");
  const double variance = variance_fn(family, mu0);  // validates mu0
  if (!family.mean_domain().contains(mu0)) throw DomainError("build_basis: mean outside Omega");
  const double scale = std::sqrt(variance);
  const double v2 = family.v2();

  // Doubles are dyadic rationals, so the conversion below is exact.
  mpq_class e0, e1, e2;
  exact_variance_coefficients(family.kind(), mpq_class(family.parameter()), mpq_class(mu0), e0, e1,
                              e2);
  const auto centered = centered_basis(e0, e1, e2, mpq_class(mu0), K);

  OrthoPolyBasis basis(family, mu0);
  basis.requested_ = K;
  basis.variance_ = variance;
  basis.scale_ = scale;
  for (std::size_t k = 0; k < centered.size(); ++k) {
    basis.std_norms_.push_back(a_norm(static_cast<int>(k), v2));

    // Three-term recurrence in w: q_{k+1} = (w - alpha_k) q_k - beta_k q_{k-1}.
    // With e_k the coefficient of u^{k-1} in p_k, alpha_k scale = e_k - e_{k+1};
    // beta_k = ||p_k||^2 / (||p_{k-1}||^2 V) = k (1 + (k - 1) v2), exact since
    // the norms were checked exactly above.
    if (k + 1 < centered.size()) {
      const mpq_class ek = k == 0 ? mpq_class(0) : centered[k][k - 1];
      const mpq_class diff = ek - centered[k + 1][k];
      basis.alpha_.push_back(diff.get_d() / scale);
    }
    if (k >= 1) {
      mpq_class beta = mpq_class(static_cast<long>(k)) * (1 + mpq_class(static_cast<long>(k) - 1) * e2);
      beta.canonicalize();
      basis.beta_.push_back(beta.get_d());
    }

    basis.centered_.push_back(centered[k]);
    const auto shifted = shift_to_y(centered[k], mpq_class(mu0));
    std::vector<double> out(k + 1);
    for (std::size_t j = 0; j <= k; ++j) out[j] = shifted[j].get_d();
    basis.monic_.push_back(std::move(out));
  }
  return basis;
}

void OrthoPolyBasis::check_degree(int k) const {
  if (k < 0 || k > requested_) {
    std::ostringstream os;
    os << "degree " << k << " outside [0, " << requested_ << "]";
    throw DomainError(os.str());
  }
  if (k > top_degree()) {
    std::ostringstream os;
    os << "degree " << k << " is degenerate for " << family_.tag() << " (a_k(v2) = 0)";
    throw DegenerateDegree(os.str());
  }
}

const std::vector<double>& OrthoPolyBasis::monic_coeffs(int k) const {
  check_degree(k);
  return monic_[static_cast<std::size_t>(k)];
}

double OrthoPolyBasis::squared_norm(int k) const {
  check_degree(k);
  return std_norms_[static_cast<std::size_t>(k)] * std::pow(variance_, k);
}

double OrthoPolyBasis::eval_standard(int k, double y) const {
  // Forward recurrence with a first-order running bound on the rounding error
  // (every operation and every stored coefficient off by at most one ulp).
  constexpr double u = std::numeric_limits<double>::epsilon();
  const double w = (y - mu0_) / scale_;
  double prev = 0.0, cur = 1.0;
  double err_prev = 0.0, err = 0.0;
  for (int j = 0; j < k; ++j) {
    const double a = alpha_[static_cast<std::size_t>(j)];
    const double b = j == 0 ? 0.0 : beta_[static_cast<std::size_t>(j) - 1];
    const double next = (w - a) * cur - b * prev;
    const double local = u * (3.0 * (std::fabs(w) + std::fabs(a)) * std::fabs(cur) +
                              2.0 * b * std::fabs(prev) + std::fabs(next));
    const double err_next = std::fabs(w - a) * err + b * err_prev + local;
    prev = cur;
    cur = next;
    err_prev = err;
    err = err_next;
  }
  const double norm = std::sqrt(std_norms_[static_cast<std::size_t>(k)]);
  if (err <= kRecurrenceTolerance * std::max(std::fabs(cur), norm)) return cur;

  // Cancellation: evaluate the exact coefficients at the exact point.
  const auto& c = centered_[static_cast<std::size_t>(k)];
  const mpq_class t = mpq_class(y) - mpq_class(mu0_);
  mpq_class acc(0);
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * t + c[i];
  return acc.get_d() / std::pow(scale_, k);
}

double OrthoPolyBasis::eval_monic(int k, double y) const {
  check_degree(k);
  return eval_standard(k, y) * std::pow(scale_, k);
}

double OrthoPolyBasis::eval_normalized(int k, double y) const {
  check_degree(k);
  return eval_standard(k, y) / std::sqrt(std_norms_[static_cast<std::size_t>(k)]);
}

double normalized_eval(const OrthoPolyBasis& basis, int k, double y) {
  return basis.eval_normalized(k, y);
}

// ---------------------------------------------------------------------------
// Exact rational mode.

mpq_class a_hat_exact(int k, const mpq_class& v) {
  mpq_class acc(1);
  for (int j = 0; j < k; ++j) acc *= 1 + v * j;
  return acc;
}

ExactOrthoPolyBasis build_basis_exact(FamilyKind kind, const mpq_class& parameter,
                                      const mpq_class& mu0, int K) {
  if (K < 0) throw DomainError("build_basis_exact: K must be non-negative");
  if (K > kMaxExactBasisDegree) throw CapExceeded("build_basis_exact: K exceeds the cap of 12");

  ExactOrthoPolyBasis basis{kind, parameter, mu0, 0, 0, 0, {}, {}};
  exact_variance_coefficients(kind, parameter, mu0, basis.v0, basis.v1, basis.v2);

  const auto centered = centered_basis(basis.v0, basis.v1, basis.v2, mu0, K);
  const mpq_class variance = basis.v0 + basis.v1 * mu0 + basis.v2 * mu0 * mu0;
  mpq_class var_pow(1);
  for (std::size_t k = 0; k < centered.size(); ++k) {
    auto shifted = shift_to_y(centered[k], mu0);
    basis.monic.push_back(std::move(shifted));
    mpq_class norm = mpq_class(static_cast<long>(1));
    for (std::size_t j = 1; j <= k; ++j) norm *= static_cast<long>(j);
    norm *= a_hat_exact(static_cast<int>(k), basis.v2) * var_pow;
    norm.canonicalize();
    basis.squared_norms.push_back(norm);
    var_pow *= variance;
  }
  return basis;
}

}  // namespace nefqvf
