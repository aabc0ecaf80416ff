#pragma once

#include "gmrfglm/lattice.hpp"
#include "gmrfglm/precision.hpp"
#include "gmrfglm/rng.hpp"
#include "gmrfglm/sparse.hpp"

#include <memory>
#include <optional>

namespace gmrfglm {

enum class SamplerMethod { Auto, Cholesky, Pcg };

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::Auto;
  double delta = 1e-8;
  bool reuse_noise = false;
  long dimension_threshold = 10000;
  int max_iter = 0;
  /// IC(0) preconditioning for the PCG path; false runs plain CG.
  bool precondition = true;
};

/// Cholesky when dim <= threshold, PCG otherwise (unless forced).
SamplerMethod resolve_method(const SamplerConfig &cfg, long dim);
const char *method_name(SamplerMethod m);

/// Standard normal perturbations for the PCG sampler. z1 has one block of
/// length n_edges per field row, z2 has one entry per unknown. The
/// Cholesky path uses z2 as its z.
struct NoiseVectors {
  Eigen::VectorXd z1;
  Eigen::VectorXd z2;

  static NoiseVectors draw(int rows, int n_edges, int n_voxels, StreamRng &rng);
  static NoiseVectors zeros(int rows, int n_edges, int n_voxels);
};

struct GaussianDraw {
  Eigen::VectorXd w;
  Eigen::VectorXd mu;
  int iterations = 0;
  double relres = 0.0;
};

/// Cholesky draw with an already computed factor of P B P^T and injected z:
/// mu = B^{-1} b_w, w = mu + P^T v with L^T v = z.
GaussianDraw sample_cholesky(const TriangularFactor &l, const Eigen::VectorXd &b_w,
                             const Eigen::VectorXd &z);
/// Cholesky draw end to end (ordering, factorization, solve, draw).
GaussianDraw sample_cholesky(const SparseSym &btilde, const Eigen::VectorXd &b_w, StreamRng &rng);

/// b = sum_k sqrt(alpha_k) G^T z1_k + H^T blkdiag(L_n) H z2 + b_w.
Eigen::VectorXd perturbation_rhs(const PrecisionOperator &op, const Incidence &g,
                                 const BlockFactor &l_data, const NoiseVectors &noise,
                                 const Eigen::VectorXd &b_w);

/// IC(0) of the assembled operator under a fill-reducing ordering.
Preconditioner build_preconditioner(const PrecisionOperator &op,
                                    const Permutation *perm = nullptr);

/// Perturbation draw: solves B w = perturbation_rhs(...) by PCG from x_start.
PcgResult sample_pcg(const PrecisionOperator &op, const Eigen::VectorXd &b_w, const Incidence &g,
                     const BlockFactor &l_data, const NoiseVectors &noise,
                     const Preconditioner &m, const Eigen::VectorXd &x_start, double delta,
                     int max_iter = 0);

/// Mean-only solves.
Eigen::VectorXd solve_mean(const SparseSym &btilde, const Eigen::VectorXd &b_w);
PcgResult solve_mean(const PrecisionOperator &op, const Eigen::VectorXd &b_w,
                     const Preconditioner &m, double delta,
                     const Eigen::VectorXd &x_start = Eigen::VectorXd(), int max_iter = 0);

/// Draw from the intrinsic prior by solving alpha D w = sqrt(alpha) G^T z1
/// with plain CG started at zero (minimum-norm solution).
Eigen::VectorXd sample_prior(const GmrfStructure &prior, double alpha, const Eigen::VectorXd &z1,
                             double delta, int max_iter = 0);

/// Reusable sampler for a field with a fixed sparsity pattern (the W or A
/// block of the GLM). The ordering and symbolic analysis are computed on
/// the first prepare() and reused; numeric factors are refreshed on every
/// prepare().
class FieldSampler {
public:
  FieldSampler() = default;
  FieldSampler(SamplerConfig cfg, std::shared_ptr<const GmrfStructure> prior);

  const SamplerConfig &config() const { return cfg_; }
  SamplerConfig &config() { return cfg_; }
  SamplerMethod method() const { return method_; }
  const GmrfStructure &prior() const { return *prior_; }

  /// Factor (Cholesky) or precondition (PCG) the given precision.
  void prepare(const PrecisionOperator &op);
  bool prepared() const { return prepared_; }
  const PrecisionOperator &op() const { return op_; }
  const Preconditioner &preconditioner() const { return m_; }
  const TriangularFactor &factor() const { return l_; }

  NoiseVectors draw_noise(StreamRng &rng) const;

  /// One draw from N(B^{-1} b_w, B^{-1}). x_start is the PCG warm start.
  GaussianDraw draw(const Eigen::VectorXd &b_w, const NoiseVectors &noise,
                    const Eigen::VectorXd &x_start = Eigen::VectorXd()) const;
  GaussianDraw mean(const Eigen::VectorXd &b_w,
                    const Eigen::VectorXd &x_start = Eigen::VectorXd()) const;

private:
  SamplerConfig cfg_;
  std::shared_ptr<const GmrfStructure> prior_;
  SamplerMethod method_ = SamplerMethod::Auto;
  bool prepared_ = false;
  PrecisionOperator op_;
  std::optional<Permutation> perm_;
  std::optional<CholeskySymbolic> symbolic_;
  TriangularFactor l_;
  Preconditioner m_;
  BlockFactor l_data_;
};

} // namespace gmrfglm
