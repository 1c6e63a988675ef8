#pragma once

// Low-degree likelihood ratio norms ||L^{<=D}||^2 for spiked NEF-QVF models.
//
// Kin spiking: y_i ~ rho_{x_i} (mean x_i) under the planted law and
// y_i ~ rho_{mu_i} under the null. Components in the normalized orthogonal
// polynomial basis are
//   <L, P_hat_k> = sqrt(prod a_hat_{k_i}(v2) / prod k_i!) E_x prod z_{mu_i}(x_i)^{k_i}.
// Additive spiking (sech family, mu = 0): y_i = x_i + noise, with
//   <L, P_hat_k> = E_x prod tau_hat_{k_i}(x_i).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nefqvf/families.hpp"
#include "nefqvf/meixner_series.hpp"
#include "nefqvf/orthopoly.hpp"
#include "nefqvf/random.hpp"

namespace nefqvf {

enum class SpikeKind { kKin, kAdditive };

struct SpikeAtom {
  std::vector<double> x;
  double probability;
};

class SpikePrior {
 public:
  using Sampler = std::function<void(Rng&, std::vector<double>&)>;

  // Probabilities must be non-negative and sum to 1 within 1e-12.
  static SpikePrior from_atoms(SpikeKind kind, std::vector<SpikeAtom> atoms);
  static SpikePrior from_sampler(SpikeKind kind, std::size_t dimension, Sampler sampler,
                                 std::string description);

  SpikeKind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  bool has_atoms() const { return !atoms_.empty(); }
  const std::vector<SpikeAtom>& atoms() const;
  const std::string& description() const { return description_; }

  // One draw; atom priors pick an atom by probability.
  void draw(Rng& rng, std::vector<double>& out) const;

 private:
  SpikeKind kind_ = SpikeKind::kKin;
  std::size_t dimension_ = 0;
  std::vector<SpikeAtom> atoms_;
  std::vector<double> cumulative_;
  Sampler sampler_;
  std::string description_;
};

struct KinSpikedModel {
  FamilySpec family;
  std::vector<double> null_means;
  SpikePrior prior;

  std::size_t N() const { return null_means.size(); }
  // Dimensions agree, null means in Omega, atoms in Omega^N.
  void validate() const;
};

struct AdditiveSpikedModel {
  FamilySpec family;
  std::vector<double> null_means;
  SpikePrior prior;

  std::size_t N() const { return null_means.size(); }
  void validate() const;
};

enum class LdlrMode { kExact, kMonteCarlo };

struct LdlrResult {
  double value;
  LdlrMode mode;
  Degree D;
  double stderr_ = 0.0;
  std::uint64_t samples = 0;
  // v in E f^{<=D}(r; v) for overlap bounds; v2 of the family otherwise.
  double v = 0.0;
};

inline constexpr double kMaxEnumeration = 1e7;

// Number of multi-indices k in N^N with |k| <= D and every k_i <= k_max.
double multi_index_count(std::size_t N, int D, int k_max);

double component(const KinSpikedModel& model, const std::vector<int>& k);
double component_additive(const AdditiveSpikedModel& model, const std::vector<int>& k,
                          const TranslationPolyTable& table);

// Sum of squared components over |k| <= D, enumerated in graded
// lexicographic order; entry d of the result is the partial sum for |k| <= d.
std::vector<double> ldlr_exact_by_degree(const KinSpikedModel& model, int D);
LdlrResult ldlr_exact(const KinSpikedModel& model, int D);

std::vector<double> ldlr_exact_additive_by_degree(const AdditiveSpikedModel& model, int D,
                                                  const TranslationPolyTable& table);
LdlrResult ldlr_exact_additive(const AdditiveSpikedModel& model, int D,
                               const TranslationPolyTable& table);

// r = <z(x1), z(x2)> for the model's null means.
double z_overlap(const KinSpikedModel& model, const std::vector<double>& x1,
                 const std::vector<double>& x2);

// E f^{<=D}(r; v) over independent pairs of atoms, exactly.
LdlrResult overlap_bound_exact(const KinSpikedModel& model, Degree D, double v);

// E prod_i f(z_i(x1) z_i(x2); v2) over atom pairs: ||L||^2 without truncation.
LdlrResult ldlr_full(const KinSpikedModel& model);

// Monte Carlo estimate of E f^{<=D}(r; v2) over independent prior pairs. When
// v2 < 0 a second row with v = 0 (an upper bound) is appended. A sample with
// r >= 1/v2 (v2 > 0, D = inf) makes the estimate +inf.
std::vector<LdlrResult> overlap_bound_mc(const KinSpikedModel& model, Degree D,
                                         std::uint64_t samples, std::uint64_t seed,
                                         int workers = 1);

struct ChannelRow {
  FamilySpec family;
  LdlrResult result;
};

// Exact norms for models that share N, atom probabilities and per-atom
// z-score vectors (to 1e-9); rows sorted by v2. Throws DomainError when the
// shared structure is violated.
std::vector<ChannelRow> channel_compare(const std::vector<KinSpikedModel>& models, int D);
bool non_decreasing_in_v2(const std::vector<ChannelRow>& rows, double tol = 1e-12);

// ((a - b)^2 / (4 (a + b))) (<s1, s2>^2 - n) / n.
double sbm_overlap(int n, double a, double b, const std::vector<int>& s1, const std::vector<int>& s2);

// Two-community block model over the n(n-1)/2 vertex pairs: null mean
// (a + b)/(2n), planted mean a/n or b/n by community agreement, community
// labels i.i.d. uniform. Family is poisson or binomial{m=1}.
KinSpikedModel make_sbm_model(int n, double a, double b, const FamilySpec& family);

enum class KsEstimator { kTilted, kPlain };

struct KsRow {
  int n;
  double a;
  double b;
  int D;
  double ks_ratio;  // (a - b)^2 / (2 (a + b)); 1 marks the threshold
  double value;
  double stderr_;
  std::uint64_t samples;
};

// E exp^{<=D}(r_n) over independent uniform community labels. The overlap
// depends on the labels only through J = #{i : s1_i = s2_i} ~ Bin(n, 1/2).
// kPlain samples J directly; kTilted draws J from the defensive mixture
// (1/3) Bin(n, 1/2) + (1/3) Bin(n, 1/2 + d) + (1/3) Bin(n, 1/2 - d),
// d = sqrt(2D) / (2 sqrt n), and reweights.
KsRow sbm_ks_estimate(int n, double a, double b, int D, std::uint64_t samples, std::uint64_t seed,
                      KsEstimator estimator = KsEstimator::kTilted, int workers = 1);

// Same expectation by summing over the law of J.
double sbm_ks_exact(int n, double a, double b, int D);

std::vector<KsRow> sbm_ks_scan(const std::vector<int>& ns, const std::vector<std::pair<double, double>>& ab,
                               int D, std::uint64_t samples, std::uint64_t seed,
                               KsEstimator estimator = KsEstimator::kTilted, int workers = 1);

}  // namespace nefqvf
