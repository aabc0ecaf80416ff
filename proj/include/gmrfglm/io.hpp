#pragma once

#include "gmrfglm/model.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace gmrfglm {

/// Volume series on a full grid. Text header then a float32 little-endian
/// payload of `frames` volumes, frame-major, x-fastest within a frame.
///
///   VOLSERIES 1
///   dims=nx ny nz
///   voxel_size=dx dy dz
///   frames=T
///   dtype=float32
///   byte_order=little
///   <extra key=value lines>
///   END
struct VolumeSeries {
  GridDims dims{0, 0, 0};
  std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
  int frames = 0;
  std::map<std::string, std::string> meta;
  std::vector<float> data;

  long grid_size() const { return static_cast<long>(dims[0]) * dims[1] * dims[2]; }
  float &at(int frame, long grid) { return data[static_cast<std::size_t>(frame) * grid_size() + grid]; }
  float at(int frame, long grid) const {
    return data[static_cast<std::size_t>(frame) * grid_size() + grid];
  }
};

void write_volume_series(const std::string &path, const VolumeSeries &vol);
VolumeSeries read_volume_series(const std::string &path);

/// Scatters per-voxel rows (frames x N) into a zero-filled grid series.
VolumeSeries volume_from_voxels(const VoxelLattice &lattice, const Eigen::MatrixXd &values);
/// Gathers in-mask voxels into a frames x N matrix.
Eigen::MatrixXd voxels_from_volume(const VoxelLattice &lattice, const VolumeSeries &vol);
/// Nonzero entries of the first frame.
std::vector<std::uint8_t> mask_from_volume(const VolumeSeries &vol);

/// CSV with a header row of column names.
void write_matrix_csv(const std::string &path, const Eigen::MatrixXd &m,
                      const std::vector<std::string> &header);
Eigen::MatrixXd read_matrix_csv(const std::string &path, std::vector<std::string> *header = nullptr);

/// Sparse matrix as "row col value" lines (both triangles).
void write_triplets(const std::string &path, const SparseSym &m);

/// Flat little-endian double record: K, N, P, then W (K x N column-major),
/// A (P x N column-major), lambda (N), alpha (K), beta (P).
void write_checkpoint(const std::string &path, const ModelState &s);
ModelState read_checkpoint(const std::string &path);

/// 8-bit grayscale PGM of axial slice z; values outside the mask are 0 and
/// in-mask values are mapped linearly from [lo, hi] to [1, 255].
void write_pgm_slice(const std::string &path, const VoxelLattice &lattice,
                     const Eigen::VectorXd &values, int z, double lo, double hi);

void write_json(const std::string &path, const nlohmann::json &j);
nlohmann::json read_json(const std::string &path);

/// Loads a dataset from a volume series, a mask volume and a design CSV.
GlmDataset load_dataset(const std::string &volume_path, const std::string &mask_path,
                        const std::string &design_path, int p, NeighborMode mode);

} // namespace gmrfglm
