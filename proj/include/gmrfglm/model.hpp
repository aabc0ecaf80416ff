#pragma once

#include "gmrfglm/lattice.hpp"
#include "gmrfglm/precision.hpp"

#include <memory>
#include <vector>

namespace gmrfglm {

/// Responses Y (T x N), design X (T x K) and AR order P.
struct GlmDataset {
  Eigen::MatrixXd y;
  Eigen::MatrixXd x;
  int p = 0;
  std::shared_ptr<const VoxelLattice> lattice;
  /// Global mean signal used for percent thresholds (100 after scaling).
  double grand_mean = 100.0;
  std::vector<std::string> regressor_names;

  int t() const { return static_cast<int>(y.rows()); }
  int n() const { return static_cast<int>(y.cols()); }
  int k() const { return static_cast<int>(x.cols()); }
  /// Throws Error unless T > K + P, X has no all-zero column, Y is finite.
  void validate() const;
};

/// Sufficient statistics over the conditioned time points t = P..T-1
/// (zero-based). Lag index p = 0..P-1 refers to lag p+1.
struct PrecomputedStats {
  int t = 0, n = 0, k = 0, p = 0;
  Eigen::VectorXd yty;              // N
  Eigen::MatrixXd ytx;              // N x K
  Eigen::MatrixXd xtx;              // K x K
  std::vector<Eigen::MatrixXd> xlag; // P of (T-P) x K, row i = X[i + P - 1 - p]
  std::vector<Eigen::MatrixXd> r;   // P of K x K, R_p = X^T Xlag_p
  std::vector<Eigen::MatrixXd> s;   // P*P of K x K, S_pq = Xlag_p^T Xlag_q at p*P + q
  std::vector<Eigen::MatrixXd> b;   // N of P x K, B_n = Y_n^T Xlag + d_n X
  std::vector<Eigen::MatrixXd> dx;  // N of K x (P*P), column p*P + q = Xlag_q^T d_p
  std::vector<Eigen::MatrixXd> dd;  // N of P x P
  Eigen::MatrixXd yd;               // P x N, Y_n^T d_p

  const Eigen::MatrixXd &s_at(int p1, int q1) const { return s[p1 * p + q1]; }
  /// d_n, the P x (T-P) matrix of lagged responses of one voxel.
  static Eigen::MatrixXd lags(const GlmDataset &data, int voxel);
};

PrecomputedStats precompute(const GlmDataset &data);

/// Current parameter values.
struct ModelState {
  Eigen::MatrixXd w;      // K x N
  Eigen::MatrixXd a;      // P x N
  Eigen::VectorXd lambda; // N
  Eigen::VectorXd alpha;  // K
  Eigen::VectorXd beta;   // P
};

/// Gamma hyperpriors, Ga(scale, shape) with mean scale * shape.
struct PriorHyper {
  double q1 = 10.0, q2 = 0.1;
  double u1 = 10.0, u2 = 0.1;
  double r1 = 10000.0, r2 = 0.1;
};

struct GmrfPriors {
  std::shared_ptr<const GmrfStructure> dw;
  std::shared_ptr<const GmrfStructure> da;
};

/// UGL prior for W; the AR prior reuses the same structure.
GmrfPriors make_priors(const VoxelLattice &lattice);
GmrfPriors make_priors(std::shared_ptr<const GmrfStructure> dw);

struct GammaParams {
  double scale = 1.0;
  double shape = 1.0;
  double mean() const { return scale * shape; }
  double variance() const { return scale * scale * shape; }
};

/// Conjugate update: 1/scale = quad/2 + 1/prior_scale, shape = count/2 + prior_shape.
GammaParams gamma_update(double quad, double count, double prior_scale, double prior_shape);

ModelState prior_mean_state(int k, int n, int p, const PriorHyper &hyper);

// Regressor-major stacking: v[k*N + n] = W(k, n).
Eigen::VectorXd stack_rows(const Eigen::MatrixXd &w);
Eigen::MatrixXd unstack_rows(const Eigen::VectorXd &v, int rows, int cols);

/// K x K matrix X^T X - sum_p a_p (R_p + R_p^T) + sum_pq a_p a_q S_pq.
Eigen::MatrixXd filtered_gram(const PrecomputedStats &st, const Eigen::VectorXd &a);
/// K vector Y^T X - sum_p a_p B_n[p,:] + sum_pq a_p a_q D_n[p,:,q].
Eigen::VectorXd filtered_cross(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &a);
/// P x P matrix dd^T - D_n w - (D_n w)^T + [w^T S_pq w].
Eigen::MatrixXd lag_gram(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &w);
/// P vector Y^T d - B_n w + [w^T R_p w].
Eigen::VectorXd lag_cross(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &w);
/// Residual sum of squares of one voxel over t >= P.
double residual_ss(const PrecomputedStats &st, int voxel, const Eigen::VectorXd &w,
                   const Eigen::VectorXd &a);

/// Gaussian conditional N(B^{-1} b, B^{-1}) in stacked coordinates.
struct GaussianConditional {
  PrecisionOperator op;
  Eigen::VectorXd b;
};

/// Full conditional of W. With several A samples the data blocks and the
/// linear term are averaged over them (the variational update).
GaussianConditional w_conditional(const PrecomputedStats &st,
                                  const std::vector<Eigen::MatrixXd> &a_samples,
                                  const Eigen::VectorXd &lambda, const Eigen::VectorXd &alpha,
                                  const GmrfPriors &priors);
/// Full conditional of A, averaged over the given W samples.
GaussianConditional a_conditional(const PrecomputedStats &st,
                                  const std::vector<Eigen::MatrixXd> &w_samples,
                                  const Eigen::VectorXd &lambda, const Eigen::VectorXd &beta,
                                  const GmrfPriors &priors);

double loglik_fast(const ModelState &state, const PrecomputedStats &st);
double loglik_direct(const ModelState &state, const GlmDataset &data);

/// log p(Y, W, A, lambda, alpha, beta) up to a state-independent constant.
double log_joint_unnorm(const ModelState &state, const PrecomputedStats &st,
                        const GmrfPriors &priors, const PriorHyper &hyper);

/// Row quadratic forms M_k D M_k^T for each row of a K x N matrix.
Eigen::VectorXd row_quadratic_forms(const Eigen::MatrixXd &m, const GmrfStructure &g);

} // namespace gmrfglm
