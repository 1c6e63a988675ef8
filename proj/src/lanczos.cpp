#include "nefqvf/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nefqvf/errors.hpp"
#include "nefqvf/random.hpp"

namespace nefqvf {

EigenEstimate top_eigenvalue(const Eigen::MatrixXd& a, double rel_tol, int max_iter) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw DomainError("top_eigenvalue: matrix must be square and non-empty");
  if (n == 1) return {a(0, 0), 0.0, 1};

  const int m_max = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
  Eigen::MatrixXd basis(n, m_max + 1);
  std::vector<double> alpha, beta;

  Rng rng = make_stream(0x6c616e63ULL, 0);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
  basis.col(0) = v / v.norm();

  const double scale_hint = a.cwiseAbs().maxCoeff();
  double last = 0.0;
  double last_residual = 0.0;
  for (int j = 0; j < m_max; ++j) {
    Eigen::VectorXd w = a * basis.col(j);
    const double aj = basis.col(j).dot(w);
    alpha.push_back(aj);
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass) {
      const auto q = basis.leftCols(j + 1);
      w -= q * (q.transpose() * w);
    }
    const double bj = w.norm();

    const int m = j + 1;
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub(std::max(m - 1, 0));
    for (int i = 0; i + 1 < m; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double theta = tri.eigenvalues()(m - 1);
    const double residual = std::fabs(bj * tri.eigenvectors()(m - 1, m - 1));
    last = theta;
    last_residual = residual;

    const bool invariant = bj <= 1e-14 * std::max(1.0, scale_hint);
    if (residual <= rel_tol * std::max(1.0, std::fabs(theta)) || invariant || m == n)
      return {theta, residual, m};
    beta.push_back(bj);
    basis.col(j + 1) = w / bj;
  }
  std::ostringstream os;
  os << "Lanczos did not converge in " << m_max << " steps (estimate " << last << ", residual "
     << last_residual << ")";
  throw NumericInstability(os.str());
}

}  // namespace nefqvf
