#pragma once

#include "gmrfglm/sparse.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace gmrfglm {

/// Neighbourhood used when building the lattice graph. `Slice2D` links
/// voxels only within an axial (z) slice, `Volume3D` uses 6-connectivity.
enum class NeighborMode { Slice2D, Volume3D };

using GridDims = std::array<int, 3>;

/// Masked 3D voxel grid. Voxels are the true mask entries, numbered
/// contiguously in x-fastest, then y, then z scan order.
class VoxelLattice {
public:
  VoxelLattice() = default;

  const GridDims &dims() const { return dims_; }
  const std::array<double, 3> &voxel_size() const { return voxel_size_; }
  NeighborMode mode() const { return mode_; }
  int size() const { return static_cast<int>(voxel_to_grid_.size()); }
  long grid_size() const { return static_cast<long>(mask_.size()); }

  const std::vector<std::uint8_t> &mask() const { return mask_; }
  /// Voxel index of a grid position, or -1 outside the mask.
  int voxel_at(long grid_index) const { return grid_to_voxel_[grid_index]; }
  long grid_index(int voxel) const { return voxel_to_grid_[voxel]; }
  std::array<int, 3> coords(int voxel) const;

  /// In-mask adjacent pairs (i < j), ordered by i then by axis.
  const std::vector<std::pair<int, int>> &adjacent_pairs() const {
    return pairs_;
  }
  /// Axis (0 = x, 1 = y, 2 = z) of each adjacent pair.
  const std::vector<std::uint8_t> &pair_axes() const { return pair_axes_; }

  /// Voxels of one axial slice, in voxel order.
  std::vector<int> slice_voxels(int z) const;

private:
  friend VoxelLattice build_lattice(const GridDims &, const std::vector<std::uint8_t> &,
                                    NeighborMode, const std::array<double, 3> &);

  GridDims dims_{0, 0, 0};
  std::array<double, 3> voxel_size_{1.0, 1.0, 1.0};
  NeighborMode mode_ = NeighborMode::Volume3D;
  std::vector<std::uint8_t> mask_;
  std::vector<int> grid_to_voxel_;
  std::vector<long> voxel_to_grid_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::uint8_t> pair_axes_;
};

VoxelLattice build_lattice(const GridDims &dims, const std::vector<std::uint8_t> &mask,
                           NeighborMode mode,
                           const std::array<double, 3> &voxel_size = {1.0, 1.0, 1.0});

/// Convenience: a fully masked box.
VoxelLattice build_box_lattice(const GridDims &dims, NeighborMode mode,
                               const std::array<double, 3> &voxel_size = {1.0, 1.0, 1.0});

/// Sparse N_G x N incidence matrix of the lattice graph: row e has +1 at
/// pairs[e].first and -1 at pairs[e].second. Optional per-row weights C_e
/// scale the row by sqrt(C_e) when applied.
class Incidence {
public:
  Incidence() = default;
  Incidence(int n_voxels, std::vector<std::pair<int, int>> pairs,
            std::vector<double> weights = {});

  int rows() const { return static_cast<int>(pairs_.size()); }
  int cols() const { return n_; }
  bool weighted() const { return !weights_.empty(); }
  const std::vector<std::pair<int, int>> &pairs() const { return pairs_; }
  const std::vector<double> &weights() const { return weights_; }
  double weight(int e) const { return weights_.empty() ? 1.0 : weights_[e]; }

  /// y = C^{1/2} G x
  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
  /// y += scale * G^T C^{1/2} z
  void apply_transpose_add(const double *z, double scale, double *y) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd &z) const;
  /// G^T C G assembled exactly.
  SparseSym gram() const;
  /// Dense C^{1/2} G, for tests.
  Eigen::MatrixXd to_dense() const;

private:
  int n_ = 0;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<double> weights_;
};

/// GMRF prior structure: precision D = G^T C G and its incidence factor.
struct GmrfStructure {
  NeighborMode mode = NeighborMode::Volume3D;
  SparseSym precision;
  Incidence incidence;

  int size() const { return precision.size(); }
  /// x^T D x
  double quadratic_form(const double *x) const;
};

/// Unweighted graph Laplacian: neighbour counts on the diagonal, -1 for
/// adjacent pairs.
GmrfStructure build_ugl(const VoxelLattice &lattice);

enum class WeightRule { InverseSquaredDistance, Explicit };

/// Weighted graph Laplacian D = G^T C G. With `InverseSquaredDistance`
/// C_e = 1 / |x_i - x_j|^2 using the lattice voxel size; with `Explicit`
/// the caller supplies one positive weight per adjacent pair.
GmrfStructure build_wgl(const VoxelLattice &lattice, WeightRule rule,
                        const std::vector<double> &explicit_weights = {});

} // namespace gmrfglm
