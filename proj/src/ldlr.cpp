#include "nefqvf/ldlr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nefqvf/errors.hpp"

namespace nefqvf {

// ---------------------------------------------------------------------------
// Priors and models.

SpikePrior SpikePrior::from_atoms(SpikeKind kind, std::vector<SpikeAtom> atoms) {
  if (atoms.empty()) throw DomainError("prior: at least one atom is required");
  const std::size_t dim = atoms.front().x.size();
  if (dim == 0) throw DomainError("prior: atoms must have dimension >= 1");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (a.x.size() != dim) throw DomainError("prior: atoms have different dimensions");
    if (!(a.probability >= 0.0) || !std::isfinite(a.probability))
      throw DomainError("prior: atom probabilities must be non-negative");
    for (double v : a.x)
      if (!std::isfinite(v)) throw DomainError("prior: atom coordinates must be finite");
    total += a.probability;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "prior: atom probabilities sum to " << total << ", not 1";
    throw DomainError(os.str());
  }
  SpikePrior p;
  p.kind_ = kind;
  p.dimension_ = dim;
  p.atoms_ = std::move(atoms);
  double acc = 0.0;
  for (const auto& a : p.atoms_) p.cumulative_.push_back(acc += a.probability);
  p.description_ = std::to_string(p.atoms_.size()) + " atoms";
  return p;
}

SpikePrior SpikePrior::from_sampler(SpikeKind kind, std::size_t dimension, Sampler sampler,
                                    std::string description) {
  if (dimension == 0) throw DomainError("prior: dimension must be >= 1");
  if (!sampler) throw DomainError("prior: empty sampler");
  SpikePrior p;
  p.kind_ = kind;
  p.dimension_ = dimension;
  p.sampler_ = std::move(sampler);
  p.description_ = std::move(description);
  return p;
}

const std::vector<SpikeAtom>& SpikePrior::atoms() const {
  if (atoms_.empty()) throw DomainError("prior: operation requires an atom-mode prior");
  return atoms_;
}

void SpikePrior::draw(Rng& rng, std::vector<double>& out) const {
  if (!atoms_.empty()) {
    const double u = open_unit(rng) * cumulative_.back();
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    out = atoms_[static_cast<std::size_t>(it - cumulative_.begin())].x;
    return;
  }
  out.resize(dimension_);
  sampler_(rng, out);
}

void KinSpikedModel::validate() const {
  if (null_means.empty()) throw DomainError("model: N must be >= 1");
  if (prior.kind() != SpikeKind::kKin) throw DomainError("model: kin model needs a kin prior");
  if (prior.dimension() != N()) throw DomainError("model: prior dimension differs from N");
  const auto omega = family.mean_domain();
  for (double mu : null_means)
    if (!omega.contains(mu)) throw DomainError("model: null mean outside the mean domain");
  if (prior.has_atoms()) {
    for (const auto& a : prior.atoms())
      for (double x : a.x)
        if (!omega.contains(x)) throw DomainError("model: prior atom outside the mean domain");
  }
}

void AdditiveSpikedModel::validate() const {
  if (null_means.empty()) throw DomainError("model: N must be >= 1");
  if (prior.kind() != SpikeKind::kAdditive)
    throw DomainError("model: additive model needs an additive prior");
  if (prior.dimension() != N()) throw DomainError("model: prior dimension differs from N");
  if (family.kind() != FamilyKind::kSechR1)
    throw DomainError("model: additive components are available for the sech family only");
  for (double mu : null_means)
    if (mu != 0.0) throw DomainError("model: additive components need null means equal to 0");
}

// ---------------------------------------------------------------------------
// Exact component sums.

namespace {

// Highest degree with a_hat_k(v2) != 0, capped at D.
int degree_limit(const FamilySpec& family, int D) {
  if (family.kind() == FamilyKind::kBinomial) return std::min(D, family.trials());
  return D;
}

std::vector<std::vector<double>> atom_z_scores(const KinSpikedModel& model) {
  std::vector<std::vector<double>> z;
  for (const auto& a : model.prior.atoms()) {
    std::vector<double> row(model.N());
    for (std::size_t i = 0; i < model.N(); ++i) row[i] = z_score(model.family, model.null_means[i], a.x[i]);
    z.push_back(std::move(row));
  }
  return z;
}

// weights[i][k][a]: factor contributed by coordinate i at degree k for atom a.
using WeightTable = std::vector<std::vector<std::vector<double>>>;

std::vector<double> graded_sums(const WeightTable& weights, const std::vector<double>& probs, int D,
                                int k_max) {
  const std::size_t N = weights.size();
  const std::size_t A = probs.size();
  if (multi_index_count(N, D, k_max) > kMaxEnumeration) {
    std::ostringstream os;
    os << "enumeration of " << multi_index_count(N, D, k_max)
       << " multi-indices exceeds the cap of 1e7";
    throw CapExceeded(os.str());
  }
  // prod[i][a]: product of the factors of coordinates < i.
  std::vector<std::vector<double>> prod(N + 1, std::vector<double>(A, 1.0));
  std::vector<double> by_degree(static_cast<std::size_t>(D) + 1, 0.0);

  auto squared_component = [&](const std::vector<double>& p) {
    double c = 0.0;
    for (std::size_t a = 0; a < A; ++a) c += probs[a] * p[a];
    return c * c;
  };

  double level = 0.0;
  // Visits the multi-indices of total degree d with coordinates >= i free,
  // largest k_i first (graded lexicographic order).
  std::function<void(std::size_t, int)> visit = [&](std::size_t i, int remaining) {
    if (remaining == 0) {
      level += squared_component(prod[i]);
      return;
    }
    if (i == N) return;
    const int top = std::min(remaining, k_max);
    const int bottom = (i + 1 == N) ? remaining : 0;
    for (int k = top; k >= bottom; --k) {
      const auto& w = weights[i][static_cast<std::size_t>(k)];
      for (std::size_t a = 0; a < A; ++a) prod[i + 1][a] = prod[i][a] * w[a];
      visit(i + 1, remaining - k);
    }
  };

  double total = 0.0;
  for (int d = 0; d <= D; ++d) {
    level = 0.0;
    visit(0, d);
    total += level;
    by_degree[static_cast<std::size_t>(d)] = total;
  }
  return by_degree;
}

std::vector<double> atom_probabilities(const SpikePrior& prior) {
  std::vector<double> p;
  for (const auto& a : prior.atoms()) p.push_back(a.probability);
  return p;
}

}  // namespace

double multi_index_count(std::size_t N, int D, int k_max) {
  if (D < 0) return 0.0;
  // ways[d]: number of vectors over the coordinates so far with total d.
  std::vector<double> ways(static_cast<std::size_t>(D) + 1, 0.0);
  ways[0] = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> next(ways.size(), 0.0);
    for (int d = 0; d <= D; ++d)
      for (int k = 0; k <= std::min(k_max, d); ++k)
        next[static_cast<std::size_t>(d)] += ways[static_cast<std::size_t>(d - k)];
    ways = std::move(next);
    if (std::accumulate(ways.begin(), ways.end(), 0.0) > 1e300) break;
  }
  return std::accumulate(ways.begin(), ways.end(), 0.0);
}

double component(const KinSpikedModel& model, const std::vector<int>& k) {
  model.validate();
  if (k.size() != model.N()) throw DomainError("component: multi-index length differs from N");
  const double v2 = model.family.v2();
  double factor = 1.0;
  for (int ki : k) {
    if (ki < 0) throw DomainError("component: negative degree");
    if (ki > degree_limit(model.family, ki))
      throw DegenerateDegree("component: degree " + std::to_string(ki) + " is degenerate for " +
                             model.family.tag());
    factor *= a_hat(ki, v2) / std::tgamma(ki + 1.0);
  }
  const auto z = atom_z_scores(model);
  const auto& atoms = model.prior.atoms();
  double e = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    double p = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) p *= std::pow(z[a][i], k[i]);
    e += atoms[a].probability * p;
  }
  return std::sqrt(factor) * e;
}

double component_additive(const AdditiveSpikedModel& model, const std::vector<int>& k,
                          const TranslationPolyTable& table) {
  model.validate();
  if (k.size() != model.N()) throw DomainError("component: multi-index length differs from N");
  double e = 0.0;
  for (const auto& atom : model.prior.atoms()) {
    double p = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) p *= tau_hat_eval(table, k[i], atom.x[i]);
    e += atom.probability * p;
  }
  return e;
}

std::vector<double> ldlr_exact_by_degree(const KinSpikedModel& model, int D) {
  model.validate();
  if (D < 0) throw DomainError("ldlr: D must be non-negative");
  const int k_max = degree_limit(model.family, D);
  const auto z = atom_z_scores(model);
  const double v2 = model.family.v2();
  WeightTable w(model.N());
  for (std::size_t i = 0; i < model.N(); ++i) {
    for (int k = 0; k <= k_max; ++k) {
      const double scale = std::sqrt(a_hat(k, v2) / std::tgamma(k + 1.0));
      std::vector<double> col(z.size());
      for (std::size_t a = 0; a < z.size(); ++a) col[a] = scale * std::pow(z[a][i], k);
      w[i].push_back(std::move(col));
    }
  }
  return graded_sums(w, atom_probabilities(model.prior), D, k_max);
}

LdlrResult ldlr_exact(const KinSpikedModel& model, int D) {
  const auto sums = ldlr_exact_by_degree(model, D);
  return {sums.back(), LdlrMode::kExact, Degree::finite(D), 0.0, 0, model.family.v2()};
}

std::vector<double> ldlr_exact_additive_by_degree(const AdditiveSpikedModel& model, int D,
                                                  const TranslationPolyTable& table) {
  model.validate();
  if (D < 0) throw DomainError("ldlr: D must be non-negative");
  if (D > table.max_degree()) throw CapExceeded("ldlr: D exceeds the translation table degree");
  const auto& atoms = model.prior.atoms();
  WeightTable w(model.N());
  for (std::size_t i = 0; i < model.N(); ++i) {
    for (int k = 0; k <= D; ++k) {
      std::vector<double> col(atoms.size());
      for (std::size_t a = 0; a < atoms.size(); ++a) col[a] = tau_hat_eval(table, k, atoms[a].x[i]);
      w[i].push_back(std::move(col));
    }
  }
  return graded_sums(w, atom_probabilities(model.prior), D, D);
}

LdlrResult ldlr_exact_additive(const AdditiveSpikedModel& model, int D,
                               const TranslationPolyTable& table) {
  const auto sums = ldlr_exact_additive_by_degree(model, D, table);
  return {sums.back(), LdlrMode::kExact, Degree::finite(D), 0.0, 0, model.family.v2()};
}

// ---------------------------------------------------------------------------
// Overlap formulas.

double z_overlap(const KinSpikedModel& model, const std::vector<double>& x1,
                 const std::vector<double>& x2) {
  if (x1.size() != model.N() || x2.size() != model.N())
    throw DomainError("z_overlap: dimension mismatch");
  double r = 0.0;
  for (std::size_t i = 0; i < model.N(); ++i)
    r += z_score(model.family, model.null_means[i], x1[i]) *
         z_score(model.family, model.null_means[i], x2[i]);
  return r;
}

LdlrResult overlap_bound_exact(const KinSpikedModel& model, Degree D, double v) {
  model.validate();
  const auto z = atom_z_scores(model);
  const auto& atoms = model.prior.atoms();
  double total = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    for (std::size_t b = 0; b < atoms.size(); ++b) {
      double r = 0.0;
      for (std::size_t i = 0; i < model.N(); ++i) r += z[a][i] * z[b][i];
      total += atoms[a].probability * atoms[b].probability * f_leq(r, v, D);
    }
  }
  return {total, LdlrMode::kExact, D, 0.0, 0, v};
}

LdlrResult ldlr_full(const KinSpikedModel& model) {
  model.validate();
  const auto z = atom_z_scores(model);
  const auto& atoms = model.prior.atoms();
  const double v2 = model.family.v2();
  double total = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    for (std::size_t b = 0; b < atoms.size(); ++b) {
      double prod = 1.0;
      for (std::size_t i = 0; i < model.N(); ++i) prod *= f_eval(z[a][i] * z[b][i], v2);
      total += atoms[a].probability * atoms[b].probability * prod;
    }
  }
  return {total, LdlrMode::kExact, Degree::infinite(), 0.0, 0, v2};
}

std::vector<LdlrResult> overlap_bound_mc(const KinSpikedModel& model, Degree D,
                                         std::uint64_t samples, std::uint64_t seed, int workers) {
  model.validate();
  if (samples == 0) throw DomainError("ldlr mc: samples must be >= 1");
  const double v2 = model.family.v2();
  const bool with_upper = v2 < 0.0;
  constexpr std::uint64_t kBlock = 4096;
  const std::size_t blocks = static_cast<std::size_t>((samples + kBlock - 1) / kBlock);
  std::vector<MomentAccumulator> main_acc(blocks), upper_acc(blocks);
  std::vector<char> infinite(blocks, 0);

  parallel_blocks(blocks, static_cast<unsigned>(std::max(workers, 1)), [&](std::size_t b) {
    Rng rng = make_stream(seed, b);
    std::vector<double> x1, x2;
    const std::uint64_t begin = b * kBlock;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kBlock);
    for (std::uint64_t s = begin; s < end; ++s) {
      model.prior.draw(rng, x1);
      model.prior.draw(rng, x2);
      const double r = z_overlap(model, x1, x2);
      const double f = f_leq(r, v2, D);
      if (std::isinf(f)) infinite[b] = 1;
      main_acc[b].add(f);
      if (with_upper) upper_acc[b].add(f_leq(r, 0.0, D));
    }
  });

  auto finish = [&](const std::vector<MomentAccumulator>& acc, double v, bool inf) {
    MomentAccumulator total;
    for (const auto& a : acc) total.merge(a);
    LdlrResult r{total.mean(), LdlrMode::kMonteCarlo, D, total.stderr_of_mean(), samples, v};
    if (inf) {
      r.value = std::numeric_limits<double>::infinity();
      r.stderr_ = std::numeric_limits<double>::infinity();
    }
    return r;
  };
  const bool any_inf = std::any_of(infinite.begin(), infinite.end(), [](char c) { return c != 0; });
  std::vector<LdlrResult> out{finish(main_acc, v2, any_inf)};
  if (with_upper) out.push_back(finish(upper_acc, 0.0, false));
  return out;
}

// ---------------------------------------------------------------------------
// Channel comparison.

std::vector<ChannelRow> channel_compare(const std::vector<KinSpikedModel>& models, int D) {
  if (models.empty()) throw DomainError("channel_compare: no models");
  for (const auto& m : models) m.validate();
  const auto& ref = models.front();
  const auto ref_z = atom_z_scores(ref);
  const auto& ref_atoms = ref.prior.atoms();
  for (std::size_t m = 1; m < models.size(); ++m) {
    const auto& model = models[m];
    if (model.N() != ref.N()) throw DomainError("channel_compare: models differ in N");
    const auto& atoms = model.prior.atoms();
    if (atoms.size() != ref_atoms.size())
      throw DomainError("channel_compare: models differ in the number of prior atoms");
    const auto z = atom_z_scores(model);
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (std::fabs(atoms[a].probability - ref_atoms[a].probability) > 1e-12)
        throw DomainError("channel_compare: models differ in atom probabilities");
      for (std::size_t i = 0; i < model.N(); ++i)
        if (std::fabs(z[a][i] - ref_z[a][i]) > 1e-9)
          throw DomainError("channel_compare: models differ in the z-scores of atom " +
                            std::to_string(a));
    }
  }
  std::vector<ChannelRow> rows;
  for (const auto& m : models) rows.push_back({m.family, ldlr_exact(m, D)});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ChannelRow& x, const ChannelRow& y) { return x.family.v2() < y.family.v2(); });
  return rows;
}

bool non_decreasing_in_v2(const std::vector<ChannelRow>& rows, double tol) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double prev = rows[i - 1].result.value;
    if (rows[i].result.value < prev - tol * std::max(1.0, std::fabs(prev))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Two-community block model.

namespace {

double ks_kappa(double a, double b) { return (a - b) * (a - b) / (4.0 * (a + b)); }

void check_sbm(int n, double a, double b) {
  if (n < 2) throw DomainError("sbm: n must be >= 2");
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("sbm: a and b must be positive");
}

double log_binomial_pmf(int n, int j, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * std::log(p) +
         (n - j) * std::log1p(-p);
}

}  // namespace

double sbm_overlap(int n, double a, double b, const std::vector<int>& s1, const std::vector<int>& s2) {
  check_sbm(n, a, b);
  if (s1.size() != static_cast<std::size_t>(n) || s2.size() != static_cast<std::size_t>(n))
    throw DomainError("sbm_overlap: label vectors must have length n");
  long dot = 0;
  for (int i = 0; i < n; ++i) {
    if ((s1[i] != 1 && s1[i] != -1) || (s2[i] != 1 && s2[i] != -1))
      throw DomainError("sbm_overlap: labels must be +1 or -1");
    dot += s1[i] * s2[i];
  }
  const double d = static_cast<double>(dot);
  return ks_kappa(a, b) * (d * d - n) / n;
}

KinSpikedModel make_sbm_model(int n, double a, double b, const FamilySpec& family) {
  check_sbm(n, a, b);
  const bool bernoulli = family.kind() == FamilyKind::kBinomial && family.trials() == 1;
  if (family.kind() != FamilyKind::kPoisson && !bernoulli)
    throw DomainError("sbm: family must be poisson or bernoulli");
  if (bernoulli && (a >= n || b >= n)) throw DomainError("sbm: a/n and b/n must lie in (0, 1)");
  const std::size_t N = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  const double same = a / n, diff = b / n;
  auto sampler = [n, same, diff](Rng& rng, std::vector<double>& out) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (auto& v : s) v = (rng() >> 63) ? 1 : -1;
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) out[idx++] = s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)] ? same : diff;
  };
  std::ostringstream desc;
  desc << "sbm(n=" << n << ", a=" << a << ", b=" << b << ")";
  return {family, std::vector<double>(N, (a + b) / (2.0 * n)),
          SpikePrior::from_sampler(SpikeKind::kKin, N, sampler, desc.str())};
}

double sbm_ks_exact(int n, double a, double b, int D) {
  check_sbm(n, a, b);
  const auto series = f_trunc(D, 0.0);
  const double kappa = ks_kappa(a, b);
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double o = 2.0 * j - n;
    total += std::exp(log_binomial_pmf(n, j, 0.5)) * series(kappa * (o * o - n) / n);
  }
  return total;
}

KsRow sbm_ks_estimate(int n, double a, double b, int D, std::uint64_t samples, std::uint64_t seed,
                      KsEstimator estimator, int workers) {
  check_sbm(n, a, b);
  if (D < 0) throw DomainError("sbm: D must be non-negative");
  if (samples == 0) throw DomainError("sbm: samples must be >= 1");
  const auto series = f_trunc(D, 0.0);
  const double kappa = ks_kappa(a, b);
  const double delta = std::min(0.49, std::sqrt(2.0 * D) / (2.0 * std::sqrt(static_cast<double>(n))));
  const double tilts[3] = {0.5, 0.5 + delta, 0.5 - delta};

  // Importance weight of J under the mixture relative to Bin(n, 1/2).
  auto weight = [&](int j) {
    double q = 0.0;
    for (double p : tilts) q += std::exp(log_binomial_pmf(n, j, p) - log_binomial_pmf(n, j, 0.5)) / 3.0;
    return 1.0 / q;
  };

  constexpr std::uint64_t kBlock = 1 << 15;
  const std::size_t blocks = static_cast<std::size_t>((samples + kBlock - 1) / kBlock);
  std::vector<MomentAccumulator> acc(blocks);
  parallel_blocks(blocks, static_cast<unsigned>(std::max(workers, 1)), [&](std::size_t blk) {
    Rng rng = make_stream(seed, blk);
    std::binomial_distribution<int> draws[3] = {std::binomial_distribution<int>(n, tilts[0]),
                                                std::binomial_distribution<int>(n, tilts[1]),
                                                std::binomial_distribution<int>(n, tilts[2])};
    const std::uint64_t begin = blk * kBlock;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kBlock);
    for (std::uint64_t s = begin; s < end; ++s) {
      int j;
      double w = 1.0;
      if (estimator == KsEstimator::kPlain) {
        j = draws[0](rng);
      } else {
        const auto comp = static_cast<std::size_t>(rng() % 3);
        j = draws[comp](rng);
        w = weight(j);
      }
      const double o = 2.0 * j - n;
      acc[blk].add(w * series(kappa * (o * o - n) / n));
    }
  });
  MomentAccumulator total;
  for (const auto& x : acc) total.merge(x);
  return {n, a, b, D, (a - b) * (a - b) / (2.0 * (a + b)), total.mean(), total.stderr_of_mean(), samples};
}

std::vector<KsRow> sbm_ks_scan(const std::vector<int>& ns, const std::vector<std::pair<double, double>>& ab,
                               int D, std::uint64_t samples, std::uint64_t seed, KsEstimator estimator,
                               int workers) {
  std::vector<KsRow> rows;
  std::uint64_t point = 0;
  for (const auto& [a, b] : ab) {
    for (int n : ns) {
      // Each grid point gets its own seed so rows do not share draws.
      rows.push_back(sbm_ks_estimate(n, a, b, D, samples, seed + 0x9e3779b97f4a7c15ULL * ++point,
                                     estimator, workers));
    }
  }
  return rows;
}

}  // namespace nefqvf
