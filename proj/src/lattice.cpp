#include "gmrfglm/lattice.hpp"

#include <cmath>

namespace gmrfglm {

std::array<int, 3> VoxelLattice::coords(int voxel) const {
  const long g = voxel_to_grid_[voxel];
  const int x = static_cast<int>(g % dims_[0]);
  const int y = static_cast<int>((g / dims_[0]) % dims_[1]);
  const int z = static_cast<int>(g / (static_cast<long>(dims_[0]) * dims_[1]));
  return {x, y, z};
}

std::vector<int> VoxelLattice::slice_voxels(int z) const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (coords(v)[2] == z)
      out.push_back(v);
  return out;
}

VoxelLattice build_lattice(const GridDims &dims, const std::vector<std::uint8_t> &mask,
                           NeighborMode mode, const std::array<double, 3> &voxel_size) {
  for (int d : dims)
    if (d <= 0)
      throw Error("build_lattice: dimensions must be positive");
  const long total = static_cast<long>(dims[0]) * dims[1] * dims[2];
  if (static_cast<long>(mask.size()) != total)
    throw Error("build_lattice: mask size does not match dimensions");
  for (double s : voxel_size)
    if (!(s > 0.0))
      throw Error("build_lattice: voxel size must be positive");

  VoxelLattice lat;
  lat.dims_ = dims;
  lat.voxel_size_ = voxel_size;
  lat.mode_ = mode;
  lat.mask_.resize(total);
  lat.grid_to_voxel_.assign(total, -1);
  for (long g = 0; g < total; ++g) {
    lat.mask_[g] = mask[g] ? 1 : 0;
    if (mask[g]) {
      lat.grid_to_voxel_[g] = static_cast<int>(lat.voxel_to_grid_.size());
      lat.voxel_to_grid_.push_back(g);
    }
  }
  if (lat.voxel_to_grid_.empty())
    throw Error("build_lattice: no voxels");

  const long sx = 1, sy = dims[0], sz = static_cast<long>(dims[0]) * dims[1];
  const int n_axes = mode == NeighborMode::Volume3D ? 3 : 2;
  for (int v = 0; v < lat.size(); ++v) {
    const auto c = lat.coords(v);
    const long g = lat.voxel_to_grid_[v];
    const long strides[3] = {sx, sy, sz};
    for (int axis = 0; axis < n_axes; ++axis) {
      if (c[axis] + 1 >= dims[axis])
        continue;
      const int w = lat.grid_to_voxel_[g + strides[axis]];
      if (w >= 0) {
        lat.pairs_.emplace_back(v, w);
        lat.pair_axes_.push_back(static_cast<std::uint8_t>(axis));
      }
    }
  }
  return lat;
}

VoxelLattice build_box_lattice(const GridDims &dims, NeighborMode mode,
                               const std::array<double, 3> &voxel_size) {
  const long total = static_cast<long>(dims[0]) * dims[1] * dims[2];
  return build_lattice(dims, std::vector<std::uint8_t>(total, 1), mode, voxel_size);
}

// ---------------------------------------------------------------------------

Incidence::Incidence(int n_voxels, std::vector<std::pair<int, int>> pairs,
                     std::vector<double> weights)
    : n_(n_voxels), pairs_(std::move(pairs)), weights_(std::move(weights)) {
  if (!weights_.empty() && weights_.size() != pairs_.size())
    throw Error("Incidence: one weight per pair required");
  for (double w : weights_)
    if (!(w > 0.0))
      throw Error("Incidence: weights must be positive");
}

Eigen::VectorXd Incidence::apply(const Eigen::VectorXd &x) const {
  Eigen::VectorXd y(rows());
  for (int e = 0; e < rows(); ++e) {
    const double d = x[pairs_[e].first] - x[pairs_[e].second];
    y[e] = weights_.empty() ? d : std::sqrt(weights_[e]) * d;
  }
  return y;
}

void Incidence::apply_transpose_add(const double *z, double scale, double *y) const {
  for (int e = 0; e < rows(); ++e) {
    const double v = scale * (weights_.empty() ? z[e] : std::sqrt(weights_[e]) * z[e]);
    y[pairs_[e].first] += v;
    y[pairs_[e].second] -= v;
  }
}

Eigen::VectorXd Incidence::apply_transpose(const Eigen::VectorXd &z) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  apply_transpose_add(z.data(), 1.0, y.data());
  return y;
}

SparseSym Incidence::gram() const {
  std::vector<Triplet> t;
  t.reserve(3 * pairs_.size() + n_);
  for (int i = 0; i < n_; ++i)
    t.push_back({i, i, 0.0});
  for (int e = 0; e < rows(); ++e) {
    const double w = weight(e);
    const auto [i, j] = pairs_[e];
    t.push_back({i, i, w});
    t.push_back({j, j, w});
    t.push_back({std::max(i, j), std::min(i, j), -w});
  }
  return SparseSym::from_triplets(n_, t);
}

Eigen::MatrixXd Incidence::to_dense() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows(), n_);
  for (int e = 0; e < rows(); ++e) {
    const double s = std::sqrt(weight(e));
    g(e, pairs_[e].first) = s;
    g(e, pairs_[e].second) = -s;
  }
  return g;
}

double GmrfStructure::quadratic_form(const double *x) const {
  // Sum of weighted squared differences equals x^T G^T C G x = x^T D x.
  double s = 0.0;
  const auto &pairs = incidence.pairs();
  for (int e = 0; e < incidence.rows(); ++e) {
    const double d = x[pairs[e].first] - x[pairs[e].second];
    s += incidence.weight(e) * d * d;
  }
  return s;
}

GmrfStructure build_ugl(const VoxelLattice &lattice) {
  GmrfStructure g;
  g.mode = lattice.mode();
  g.incidence = Incidence(lattice.size(), lattice.adjacent_pairs());
  g.precision = g.incidence.gram();
  return g;
}

GmrfStructure build_wgl(const VoxelLattice &lattice, WeightRule rule,
                        const std::vector<double> &explicit_weights) {
  const auto &pairs = lattice.adjacent_pairs();
  std::vector<double> weights(pairs.size());
  if (rule == WeightRule::Explicit) {
    if (explicit_weights.size() != pairs.size())
      throw Error("build_wgl: expected one weight per adjacent pair");
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      if (!(explicit_weights[e] > 0.0))
        throw Error("build_wgl: non-positive weight");
      weights[e] = explicit_weights[e];
    }
  } else {
    const auto &vs = lattice.voxel_size();
    const auto &axes = lattice.pair_axes();
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      // Lattice neighbours differ along exactly one axis.
      const double d = vs[axes[e]];
      weights[e] = 1.0 / (d * d);
    }
  }
  GmrfStructure g;
  g.mode = lattice.mode();
  g.incidence = Incidence(lattice.size(), pairs, std::move(weights));
  g.precision = g.incidence.gram();
  return g;
}

} // namespace gmrfglm
