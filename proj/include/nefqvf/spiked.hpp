#pragma once

// Rademacher-spiked Wigner models Y_ij = (lambda / sqrt n) x_i x_j + Z_ij,
// i < j, with sech noise (1/2) sech(pi x / 2), heavy noise with density
// proportional to (1 + x^2)^{-alpha/2}, or the mixed model whose null flips a
// fair coin between the two and whose planted law always uses sech noise.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "nefqvf/meixner_series.hpp"
#include "nefqvf/random.hpp"

namespace nefqvf {

enum class NoiseKind { kSech, kHeavy, kMixed };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSech;
  double alpha = 3.0;  // heavy and mixed only

  static NoiseSpec sech() { return {NoiseKind::kSech, 0.0}; }
  static NoiseSpec heavy(double alpha) { return {NoiseKind::kHeavy, alpha}; }
  static NoiseSpec mixed(double alpha) { return {NoiseKind::kMixed, alpha}; }
  std::string str() const;
};

// "sech", "heavy" or "mixed".
NoiseSpec parse_noise(const std::string& kind, double alpha);

inline constexpr int kMaxMatrixSize = 4000;

class WigInstance {
 public:
  int n() const { return n_; }
  double lambda() const { return lambda_; }
  const NoiseSpec& noise() const { return noise_; }
  bool planted() const { return planted_; }
  // Empty unless planted.
  const std::vector<std::int8_t>& spike() const { return spike_; }
  // Mixed nulls: 1 for sech noise, 2 for heavy noise; 0 otherwise.
  int branch() const { return branch_; }

  // Y_ij for i != j (symmetric); 0 on the diagonal.
  double entry(int i, int j) const;
  // Packed upper triangle, row by row: (0,1), (0,2), ..., (n-2, n-1).
  const std::vector<double>& entries() const { return entries_; }
  std::vector<double>& mutable_entries() { return entries_; }

  double max_abs_entry() const;

  // Symmetric matrix with zero diagonal, entries scaled by 1/sqrt(n) after
  // applying `transform` entrywise (identity when null).
  Eigen::MatrixXd normalized_matrix(double (*transform)(double) = nullptr) const;

  // Builds an instance from given entries; used for fixtures.
  static WigInstance from_entries(int n, double lambda, NoiseSpec noise, std::vector<double> entries);

 private:
  friend WigInstance sample_wig(int, double, NoiseSpec, bool, Rng&);
  int n_ = 0;
  double lambda_ = 0.0;
  NoiseSpec noise_;
  bool planted_ = false;
  std::vector<std::int8_t> spike_;
  int branch_ = 0;
  std::vector<double> entries_;
};

WigInstance sample_wig(int n, double lambda, NoiseSpec noise, bool planted, Rng& rng);

// Draw from the density proportional to (1 + x^2)^{-alpha/2}, alpha > 1:
// a Student-t variate with alpha - 1 degrees of freedom divided by sqrt(alpha - 1).
double sample_heavy(double alpha, Rng& rng);
// P(|X| > t) under the heavy law, by numeric integration.
double heavy_tail_mass(double alpha, double t);

// 2 sqrt(2) / pi.
double lambda_star();
// (int w'^2 / w)^{-1/2} for w(x) = (1/2) sech(pi x / 2), by quadrature.
double lambda_star_fisher();

// (pi/2) tanh((pi/2) y).
double tanh_transform(double y);

enum class Label { kP, kQ };
inline char label_char(Label l) { return l == Label::kP ? 'p' : 'q'; }

struct TestVerdict {
  Label label;
  double statistic;
  double threshold;
  bool branched = false;  // mixed test decided by the entrywise maximum
};

enum class TpcaThresholdForm {
  // (2/l* + lambda/l*^2 + 1/lambda) / 2, midway between the null bulk edge
  // and the spiked top eigenvalue of the transformed matrix
  kBulkEdgeMidpoint,
  // (2 l* + l*^2 lambda + 1/lambda) / 2 as printed; below the null bulk edge
  kSwappedLambdaStar,
};

double pca_threshold(double lambda);
double tpca_threshold(double lambda, TpcaThresholdForm form = TpcaThresholdForm::kBulkEdgeMidpoint);

TestVerdict pca_test(const WigInstance& inst);
TestVerdict tpca_test(const WigInstance& inst,
                      TpcaThresholdForm form = TpcaThresholdForm::kBulkEdgeMidpoint);
// q when max |Y_ij| > 10 log n, otherwise the tpca verdict.
TestVerdict mixed_test(const WigInstance& inst,
                       TpcaThresholdForm form = TpcaThresholdForm::kBulkEdgeMidpoint);

enum class TestId { kPca, kTpca, kMixed };
TestId parse_test_id(const std::string& name);
std::string test_name(TestId id);
TestVerdict run_test(TestId id, const WigInstance& inst, TpcaThresholdForm form);

// Sum over k in {0..D}^{n(n-1)/2} of <L, P_hat_k>^2 for the sech model,
// evaluated as E_x prod_{i<j} (A + B x_i x_j) with A, B the even/odd sums of
// tau_hat_k(lambda / sqrt n)^2. Caps: n <= 8, D <= 3.
double entrywise_ldlr_exact(int n, double lambda, int D, const TranslationPolyTable& table);

// Same sum with each tau_hat_k^2 replaced by its squared pointwise bound;
// an upper bound for entrywise_ldlr_exact. Caps as above.
double entrywise_chain_bound_exact(int n, double lambda, int D);

// (eD)^{2 lambda / sqrt n} lambda^2 (lambda*^{-2} - 1/(3D)).
double entrywise_mc_coefficient(int n, double lambda, int D);

// E exp(c <x1, x2>^2 / (2n)) over independent uniform x1, x2 in {+-1}^n,
// exactly (binomial law of the overlap).
double rademacher_overlap_mgf_exact(int n, double c);

struct OverlapMgfEstimate {
  double value;
  double stderr_;
  std::uint64_t samples;
};

OverlapMgfEstimate rademacher_overlap_mgf_mc(int n, double c, std::uint64_t samples,
                                             std::uint64_t seed, int workers = 1);

struct EntrywiseMcBound {
  double c;
  OverlapMgfEstimate estimate;
  bool outside_regime;  // lambda >= lambda* + 1/(20D)
  bool divergent;       // c >= 1: the limit is infinite
};

EntrywiseMcBound entrywise_ldlr_mc_bound(int n, double lambda, int D, std::uint64_t samples,
                                         std::uint64_t seed, int workers = 1);

struct PowerRow {
  double lambda;
  int trials;
  double type1;
  double type1_stderr;
  double type2;
  double type2_stderr;
  double power() const { return 1.0 - type2; }
};

// Per lambda: `trials` null and `trials` planted instances. Trial t of grid
// point g uses streams derived from (seed, g, t), so the table does not
// depend on the worker count.
std::vector<PowerRow> power_curve(TestId test, NoiseSpec noise, const std::vector<double>& lambdas,
                                  int n, int trials, std::uint64_t seed, int workers = 1,
                                  TpcaThresholdForm form = TpcaThresholdForm::kBulkEdgeMidpoint);

}  // namespace nefqvf
