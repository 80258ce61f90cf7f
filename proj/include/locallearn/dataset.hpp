#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locallearn/error.hpp"
#include "locallearn/random.hpp"

namespace locallearn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// M input rows, optional M target rows.
struct TrainingSet {
  Mat inputs;
  std::optional<Mat> targets;
  std::string descriptor;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
  bool supervised() const { return targets.has_value(); }

  void validate() const {
    if (targets) require(targets->rows() == inputs.rows(), "inputs and targets have different row counts");
  }

  Vec input(Eigen::Index t) const { return inputs.row(t).transpose(); }
  Vec target(Eigen::Index t) const {
    require(targets.has_value(), "training set has no targets");
    return targets->row(t).transpose();
  }
};

/// Copy of data with a constant +1 input prepended (bias as component 0).
inline TrainingSet with_bias(const TrainingSet& data) {
  TrainingSet out = data;
  out.inputs.resize(data.size(), data.input_dim() + 1);
  out.inputs.col(0).setOnes();
  out.inputs.rightCols(data.input_dim()) = data.inputs;
  return out;
}

/// Same data with every activity mapped x -> 2x - 1 (or the inverse when to_unit).
inline TrainingSet affine_range_map(const TrainingSet& data, bool to_unit = false) {
  TrainingSet out = data;
  auto map = [&](Mat& m) {
    if (to_unit)
      m = (m.array() + 1.0) / 2.0;
    else
      m = 2.0 * m.array() - 1.0;
  };
  map(out.inputs);
  if (out.targets) map(*out.targets);
  return out;
}

struct GaussianSpec {
  int n = 10;
  int m = 500;
  Vec mean;            // length n, zero when empty
  Mat cov;             // n x n, identity when empty
  Vec teacher;         // optional linear teacher, targets = teacher . I + noise
  double target_noise = 0.0;
};

inline TrainingSet gaussian(const GaussianSpec& spec, std::uint64_t seed) {
  require(spec.n > 0 && spec.m > 0, "gaussian: n and m must be positive");
  Vec mean = spec.mean.size() ? spec.mean : Vec::Zero(spec.n);
  Mat cov = spec.cov.size() ? spec.cov : Mat::Identity(spec.n, spec.n);
  require(mean.size() == spec.n && cov.rows() == spec.n && cov.cols() == spec.n, "gaussian: inconsistent dimensions");
  Eigen::LLT<Mat> llt(cov);
  Mat l;
  if (llt.info() == Eigen::Success) {
    l = llt.matrixL();
  } else {
    // semi-definite covariance: fall back to a symmetric square root
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    require(es.eigenvalues().minCoeff() > -1e-12, "gaussian: covariance is not positive semi-definite");
    l = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Rng rng = make_rng(seed, 0);
  TrainingSet ts;
  ts.inputs.resize(spec.m, spec.n);
  Vec z(spec.n);
  for (int t = 0; t < spec.m; ++t) {
    for (int i = 0; i < spec.n; ++i) z(i) = normal(rng);
    ts.inputs.row(t) = (mean + l * z).transpose();
  }
  if (spec.teacher.size()) {
    require(spec.teacher.size() == spec.n, "gaussian: teacher length must equal n");
    Mat t = ts.inputs * spec.teacher;
    for (int r = 0; r < spec.m; ++r) t(r, 0) += spec.target_noise > 0 ? normal(rng, 0, spec.target_noise) : 0.0;
    ts.targets = t;
  }
  ts.descriptor = "gaussian";
  ts.seed = seed;
  return ts;
}

struct ClusteredSpec {
  int n_clusters = 10;
  int per_cluster = 100;
  int n_bits = 100;
  double flip_prob = 0.05;
  int test_per_cluster = 0;
};

struct ClusteredData {
  TrainingSet train;
  TrainingSet test;
  Mat centroids;
  std::vector<int> train_labels;
  std::vector<int> test_labels;
};

/// Fair-coin +-1 centroids; each example flips every centroid bit independently. Targets equal inputs.
inline ClusteredData clustered_binary(const ClusteredSpec& spec, std::uint64_t seed) {
  require(spec.n_clusters > 0 && spec.per_cluster > 0 && spec.n_bits > 0, "clustered_binary: sizes must be positive");
  require(spec.flip_prob >= 0 && spec.flip_prob <= 1, "clustered_binary: flip probability outside [0,1]");
  Rng rng = make_rng(seed, 1);
  ClusteredData out;
  out.centroids.resize(spec.n_clusters, spec.n_bits);
  for (int c = 0; c < spec.n_clusters; ++c)
    for (int b = 0; b < spec.n_bits; ++b) out.centroids(c, b) = coin(rng) ? 1.0 : -1.0;
  auto draw = [&](int per, TrainingSet& ts, std::vector<int>& labels) {
    ts.inputs.resize(spec.n_clusters * per, spec.n_bits);
    int r = 0;
    for (int c = 0; c < spec.n_clusters; ++c)
      for (int k = 0; k < per; ++k, ++r) {
        labels.push_back(c);
        for (int b = 0; b < spec.n_bits; ++b)
          ts.inputs(r, b) = coin(rng, spec.flip_prob) ? -out.centroids(c, b) : out.centroids(c, b);
      }
    ts.targets = ts.inputs;
    ts.descriptor = "clustered_binary";
    ts.seed = seed;
  };
  draw(spec.per_cluster, out.train, out.train_labels);
  if (spec.test_per_cluster > 0) draw(spec.test_per_cluster, out.test, out.test_labels);
  return out;
}

/// Bit k of the row index gives input k (+1 when set). Bit r of function_id gives the target of row r.
inline TrainingSet boolean_table(int n, std::uint64_t function_id) {
  require(n >= 1 && n <= 6, "boolean_table: n must be in 1..6");
  const int rows = 1 << n;
  TrainingSet ts;
  ts.inputs.resize(rows, n);
  Mat t(rows, 1);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < n; ++k) ts.inputs(r, k) = (r >> k) & 1 ? 1.0 : -1.0;
    t(r, 0) = (function_id >> r) & 1 ? 1.0 : -1.0;
  }
  ts.targets = t;
  ts.descriptor = "boolean_table";
  return ts;
}

/// Random +-1 inputs labelled by a Gaussian teacher with a bias; ties are redrawn.
inline TrainingSet linsep_random(int n, int m, std::uint64_t seed) {
  require(n > 0 && m > 0, "linsep_random: n and m must be positive");
  Rng rng = make_rng(seed, 2);
  Vec teacher(n + 1);
  for (int i = 0; i <= n; ++i) teacher(i) = normal(rng);
  TrainingSet ts;
  ts.inputs.resize(m, n);
  Mat t(m, 1);
  for (int r = 0; r < m; ++r) {
    double s = 0;
    do {
      s = teacher(0);
      for (int i = 0; i < n; ++i) {
        ts.inputs(r, i) = coin(rng) ? 1.0 : -1.0;
        s += teacher(i + 1) * ts.inputs(r, i);
      }
    } while (s == 0.0);
    t(r, 0) = s > 0 ? 1.0 : -1.0;
  }
  ts.targets = t;
  ts.descriptor = "linsep_random";
  ts.seed = seed;
  return ts;
}

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
  std::size_t item_size() const {
    std::size_t s = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) s *= dims[i];
    return s;
  }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(in.gcount() == 4, "idx: truncated header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

template <typename T>
T read_be(std::istream& in) {
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), "idx: truncated data");
  unsigned char le[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) le[i] = b[sizeof(T) - 1 - i];
  T v;
  std::memcpy(&v, le, sizeof(T));
  return v;
}

}  // namespace detail

/// Reads an IDX container (big-endian header: 0, 0, type code, rank; then rank dimensions).
inline IdxArray read_idx(std::istream& in) {
  unsigned char magic[4];
  in.read(reinterpret_cast<char*>(magic), 4);
  require(in.gcount() == 4, "idx: truncated header");
  require(magic[0] == 0 && magic[1] == 0, "idx: bad magic number");
  const unsigned type = magic[2];
  const unsigned rank = magic[3];
  require(rank >= 1, "idx: rank must be at least 1");
  IdxArray out;
  std::size_t total = 1;
  for (unsigned i = 0; i < rank; ++i) {
    out.dims.push_back(detail::read_be32(in));
    total *= out.dims.back();
  }
  require(total < (std::size_t(1) << 34), "idx: implausible size");
  out.data.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    switch (type) {
      case 0x08: {
        int c = in.get();
        require(c != EOF, "idx: truncated data");
        out.data[i] = static_cast<unsigned char>(c);
        break;
      }
      case 0x09: {
        int c = in.get();
        require(c != EOF, "idx: truncated data");
        out.data[i] = static_cast<signed char>(static_cast<unsigned char>(c));
        break;
      }
      case 0x0B: out.data[i] = detail::read_be<std::int16_t>(in); break;
      case 0x0C: out.data[i] = detail::read_be<std::int32_t>(in); break;
      case 0x0D: out.data[i] = detail::read_be<float>(in); break;
      case 0x0E: out.data[i] = detail::read_be<double>(in); break;
      default: throw Error("idx: unknown type code");
    }
  }
  return out;
}

inline IdxArray read_idx_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  return read_idx(in);
}

/// Loads the first `subset` items (0 = all), scaling u8 pixels to [0,1] and mapping to +-1 around the threshold.
/// Labels, when given, become one-hot +-1 targets.
inline TrainingSet idx_dataset(const std::string& images_path, const std::string& labels_path, std::size_t subset,
                               std::optional<double> binarize_threshold = 0.2) {
  IdxArray img = read_idx_file(images_path);
  std::size_t m = img.count();
  if (subset > 0 && subset < m) m = subset;
  const std::size_t d = img.item_size();
  TrainingSet ts;
  ts.inputs.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  double maxv = 0;
  for (double v : img.data) maxv = std::max(maxv, v);
  const double scale = maxv > 1.0 ? 255.0 : 1.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double v = img.data[r * d + c] / scale;
      if (binarize_threshold) v = v > *binarize_threshold ? 1.0 : -1.0;
      ts.inputs(r, c) = v;
    }
  if (!labels_path.empty()) {
    IdxArray lab = read_idx_file(labels_path);
    require(lab.dims.size() == 1 && lab.count() >= m, "idx: label file does not match images");
    int classes = 0;
    for (std::size_t r = 0; r < m; ++r) classes = std::max(classes, static_cast<int>(lab.data[r]) + 1);
    Mat t = Mat::Constant(static_cast<Eigen::Index>(m), classes, -1.0);
    for (std::size_t r = 0; r < m; ++r) t(r, static_cast<int>(lab.data[r])) = 1.0;
    ts.targets = t;
  }
  ts.descriptor = "idx_file";
  return ts;
}

}  // namespace locallearn
