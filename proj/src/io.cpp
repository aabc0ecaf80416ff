#include "gmrfglm/io.hpp"

#include "gmrfglm/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gmrfglm {

namespace {

template <class T> T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T> void write_le(std::ostream &out, const T *p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char *>(p), static_cast<std::streamsize>(n * sizeof(T)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const T v = byteswap_value(p[i]);
      out.write(reinterpret_cast<const char *>(&v), sizeof(T));
    }
  }
}

template <class T> void read_le(std::istream &in, T *p, std::size_t n, const std::string &path) {
  in.read(reinterpret_cast<char *>(p), static_cast<std::streamsize>(n * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(T))
    throw Error(path + ": truncated payload");
  if constexpr (std::endian::native != std::endian::little)
    for (std::size_t i = 0; i < n; ++i)
      p[i] = byteswap_value(p[i]);
}

std::ofstream open_out(const std::string &path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string &path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in)
    throw Error("cannot open " + path);
  return in;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    out.push_back(item);
  if (!s.empty() && s.back() == sep)
    out.emplace_back();
  return out;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

void write_volume_series(const std::string &path, const VolumeSeries &vol) {
  if (vol.data.size() != static_cast<std::size_t>(vol.frames) * vol.grid_size())
    throw Error("write_volume_series: payload length does not match dims and frames");
  auto out = open_out(path, true);
  std::ostringstream h;
  h << std::setprecision(17);
  h << "VOLSERIES 1\n";
  h << "dims=" << vol.dims[0] << ' ' << vol.dims[1] << ' ' << vol.dims[2] << '\n';
  h << "voxel_size=" << vol.voxel_size[0] << ' ' << vol.voxel_size[1] << ' '
    << vol.voxel_size[2] << '\n';
  h << "frames=" << vol.frames << '\n';
  h << "dtype=float32\n";
  h << "byte_order=little\n";
  for (const auto &[k, v] : vol.meta) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw Error("write_volume_series: invalid metadata entry '" + k + "'");
    h << k << '=' << v << '\n';
  }
  h << "END\n";
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_le(out, vol.data.data(), vol.data.size());
  if (!out)
    throw Error("write_volume_series: write failed for " + path);
}

VolumeSeries read_volume_series(const std::string &path) {
  auto in = open_in(path, true);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "VOLSERIES 1")
    throw Error(path + ": not a volume series file");
  VolumeSeries vol;
  bool have_dims = false, have_frames = false;
  while (true) {
    if (!std::getline(in, line))
      throw Error(path + ": header not terminated by END");
    line = trim(line);
    if (line == "END")
      break;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ": malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    std::istringstream vs(val);
    if (key == "dims") {
      vs >> vol.dims[0] >> vol.dims[1] >> vol.dims[2];
      if (!vs || vol.dims[0] <= 0 || vol.dims[1] <= 0 || vol.dims[2] <= 0)
        throw Error(path + ": invalid dims");
      have_dims = true;
    } else if (key == "voxel_size") {
      vs >> vol.voxel_size[0] >> vol.voxel_size[1] >> vol.voxel_size[2];
      if (!vs)
        throw Error(path + ": invalid voxel_size");
    } else if (key == "frames") {
      vs >> vol.frames;
      if (!vs || vol.frames < 0)
        throw Error(path + ": invalid frames");
      have_frames = true;
    } else if (key == "dtype") {
      if (val != "float32")
        throw Error(path + ": unsupported dtype " + val);
    } else if (key == "byte_order") {
      if (val != "little")
        throw Error(path + ": unsupported byte order " + val);
    } else {
      vol.meta[key] = val;
    }
  }
  if (!have_dims || !have_frames)
    throw Error(path + ": header lacks dims or frames");
  vol.data.resize(static_cast<std::size_t>(vol.frames) * vol.grid_size());
  read_le(in, vol.data.data(), vol.data.size(), path);
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(path + ": trailing bytes after payload");
  return vol;
}

VolumeSeries volume_from_voxels(const VoxelLattice &lattice, const Eigen::MatrixXd &values) {
  if (values.cols() != lattice.size())
    throw Error("volume_from_voxels: column count must equal the voxel count");
  VolumeSeries vol;
  vol.dims = lattice.dims();
  vol.voxel_size = lattice.voxel_size();
  vol.frames = static_cast<int>(values.rows());
  vol.data.assign(static_cast<std::size_t>(vol.frames) * vol.grid_size(), 0.0f);
  for (int f = 0; f < vol.frames; ++f)
    for (int v = 0; v < lattice.size(); ++v)
      vol.at(f, lattice.grid_index(v)) = static_cast<float>(values(f, v));
  return vol;
}

Eigen::MatrixXd voxels_from_volume(const VoxelLattice &lattice, const VolumeSeries &vol) {
  if (vol.dims != lattice.dims())
    throw Error("voxels_from_volume: volume dims differ from the mask dims");
  Eigen::MatrixXd out(vol.frames, lattice.size());
  for (int f = 0; f < vol.frames; ++f)
    for (int v = 0; v < lattice.size(); ++v)
      out(f, v) = vol.at(f, lattice.grid_index(v));
  return out;
}

std::vector<std::uint8_t> mask_from_volume(const VolumeSeries &vol) {
  if (vol.frames < 1)
    throw Error("mask_from_volume: empty volume");
  std::vector<std::uint8_t> m(vol.grid_size());
  for (long g = 0; g < vol.grid_size(); ++g)
    m[g] = vol.at(0, g) != 0.0f ? 1 : 0;
  return m;
}

void write_matrix_csv(const std::string &path, const Eigen::MatrixXd &m,
                      const std::vector<std::string> &header) {
  if (!header.empty() && static_cast<long>(header.size()) != m.cols())
    throw Error("write_matrix_csv: header size does not match column count");
  auto out = open_out(path);
  out << std::setprecision(17);
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  if (!header.empty())
    out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
  if (!out)
    throw Error("write_matrix_csv: write failed for " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string &path, std::vector<std::string> *header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(path + ": empty CSV");
  std::vector<std::string> names;
  for (const auto &s : split(line, ','))
    names.push_back(trim(s));
  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    const auto cells = split(line, ',');
    if (cells.size() != names.size())
      throw Error(path + ": line " + std::to_string(lineno) + " has " +
                  std::to_string(cells.size()) + " fields, expected " +
                  std::to_string(names.size()));
    std::vector<double> r;
    for (const auto &c : cells) {
      try {
        std::size_t used = 0;
        const std::string t = trim(c);
        r.push_back(std::stod(t, &used));
        if (used != t.size())
          throw std::invalid_argument(t);
      } catch (const std::logic_error &) {
        throw Error(path + ": line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    rows.push_back(std::move(r));
  }
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
  if (header)
    *header = std::move(names);
  return m;
}

void write_triplets(const std::string &path, const SparseSym &m) {
  auto out = open_out(path);
  m.write_triplets(out);
  if (!out)
    throw Error("write_triplets: write failed for " + path);
}

void write_checkpoint(const std::string &path, const ModelState &s) {
  const long k = s.w.rows(), n = s.w.cols(), p = s.a.rows();
  if ((p > 0 && s.a.cols() != n) || s.lambda.size() != n || s.alpha.size() != k ||
      s.beta.size() != p)
    throw Error("write_checkpoint: inconsistent state dimensions");
  auto out = open_out(path, true);
  const double dims[3] = {static_cast<double>(k), static_cast<double>(n),
                          static_cast<double>(p)};
  write_le(out, dims, 3);
  write_le(out, s.w.data(), static_cast<std::size_t>(s.w.size()));
  write_le(out, s.a.data(), static_cast<std::size_t>(s.a.size()));
  write_le(out, s.lambda.data(), static_cast<std::size_t>(n));
  write_le(out, s.alpha.data(), static_cast<std::size_t>(k));
  write_le(out, s.beta.data(), static_cast<std::size_t>(p));
  if (!out)
    throw Error("write_checkpoint: write failed for " + path);
}

ModelState read_checkpoint(const std::string &path) {
  auto in = open_in(path, true);
  double dims[3];
  read_le(in, dims, 3, path);
  for (double d : dims)
    if (!(d >= 0.0) || d != std::floor(d) || d > 1e9)
      throw Error(path + ": invalid checkpoint dimensions");
  const long k = static_cast<long>(dims[0]), n = static_cast<long>(dims[1]),
             p = static_cast<long>(dims[2]);
  ModelState s;
  s.w.resize(k, n);
  s.a.resize(p, n);
  s.lambda.resize(n);
  s.alpha.resize(k);
  s.beta.resize(p);
  read_le(in, s.w.data(), static_cast<std::size_t>(s.w.size()), path);
  read_le(in, s.a.data(), static_cast<std::size_t>(s.a.size()), path);
  read_le(in, s.lambda.data(), static_cast<std::size_t>(n), path);
  read_le(in, s.alpha.data(), static_cast<std::size_t>(k), path);
  read_le(in, s.beta.data(), static_cast<std::size_t>(p), path);
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(path + ": trailing bytes after checkpoint");
  return s;
}

void write_pgm_slice(const std::string &path, const VoxelLattice &lattice,
                     const Eigen::VectorXd &values, int z, double lo, double hi) {
  const GridDims &d = lattice.dims();
  if (values.size() != lattice.size())
    throw Error("write_pgm_slice: value count must equal the voxel count");
  if (z < 0 || z >= d[2])
    throw Error("write_pgm_slice: slice out of range");
  if (!(hi > lo))
    throw Error("write_pgm_slice: empty intensity range");
  auto out = open_out(path, true);
  out << "P5\n" << d[0] << ' ' << d[1] << "\n255\n";
  std::vector<unsigned char> px(static_cast<std::size_t>(d[0]) * d[1], 0);
  for (int y = 0; y < d[1]; ++y)
    for (int x = 0; x < d[0]; ++x) {
      const long g = (static_cast<long>(z) * d[1] + y) * d[0] + x;
      const int v = lattice.voxel_at(g);
      if (v < 0)
        continue;
      const double u = std::clamp((values[v] - lo) / (hi - lo), 0.0, 1.0);
      px[static_cast<std::size_t>(d[1] - 1 - y) * d[0] + x] =
          static_cast<unsigned char>(1 + std::lround(u * 254.0));
    }
  out.write(reinterpret_cast<const char *>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out)
    throw Error("write_pgm_slice: write failed for " + path);
}

void write_json(const std::string &path, const nlohmann::json &j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out)
    throw Error("write_json: write failed for " + path);
}

nlohmann::json read_json(const std::string &path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error(path + ": " + e.what());
  }
}

GlmDataset load_dataset(const std::string &volume_path, const std::string &mask_path,
                        const std::string &design_path, int p, NeighborMode mode) {
  const VolumeSeries vol = read_volume_series(volume_path);
  const VolumeSeries mvol = read_volume_series(mask_path);
  if (mvol.dims != vol.dims)
    throw Error("mask dims differ from data dims");
  GlmDataset d;
  d.lattice = std::make_shared<const VoxelLattice>(
      build_lattice(vol.dims, mask_from_volume(mvol), mode, vol.voxel_size));
  if (d.lattice->size() == 0)
    throw Error(mask_path + ": mask is empty");
  d.y = voxels_from_volume(*d.lattice, vol);
  d.x = read_matrix_csv(design_path, &d.regressor_names);
  if (d.x.rows() != d.y.rows())
    throw Error("design has " + std::to_string(d.x.rows()) + " rows but the data has " +
                std::to_string(d.y.rows()) + " frames");
  d.p = p;
  if (auto it = vol.meta.find("grand_mean"); it != vol.meta.end())
    d.grand_mean = std::stod(it->second);
  d.validate();
  return d;
}

} // namespace gmrfglm
