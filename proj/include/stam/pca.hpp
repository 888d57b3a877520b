#pragma once

// PCA baseline: fit on raw flattened pixels, project, classify/cluster the
// projections. Component count m = min(cap, smallest data dimension, number
// of components needed to reach the variance target), unless a per-phase
// schedule overrides it. Eigen does the eigendecomposition.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stam/errors.hpp"
#include "stam/snapshot.hpp"

namespace stam {

struct PcaModel {
  std::size_t input_dim = 0;
  std::size_t m = 0;                 // retained components
  std::vector<double> mean;          // input_dim
  std::vector<double> components;    // m x input_dim, row-major
  std::vector<double> explained;     // variance ratio per retained component
};

// m_override > 0 pins the component count (still capped by rank bounds).
inline PcaModel pca_fit(const std::vector<std::vector<double>>& data,
                        int m_cap, double variance_target = 0.9,
                        int m_override = 0) {
  if (data.size() < 2) throw data_error("pca_fit: need at least 2 samples");
  if (m_cap < 1) throw config_error("pca_fit: m_cap must be >= 1");
  const std::size_t n = data.size();
  const std::size_t d = data[0].size();
  for (const auto& row : data)
    if (row.size() != d) throw data_error("pca_fit: ragged data");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = data[i][j];
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  // Sample covariance; the n-1 divisor cancels out of the variance ratios.
  const Eigen::MatrixXd cov =
      (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw eval_error("pca_fit: eigendecomposition failed");
  // Eigenvalues ascending -> walk from the back for descending order.
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  double total = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    total += std::max(vals(i), 0.0);

  const std::size_t smallest_dim = std::min(n, d);
  std::size_t m;
  if (m_override > 0) {
    m = std::min<std::size_t>(m_override, smallest_dim);
  } else {
    std::size_t needed = 1;
    if (total > 0.0) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        acc += std::max(vals(static_cast<Eigen::Index>(d - 1 - i)), 0.0);
        needed = i + 1;
        if (acc / total >= variance_target) break;
      }
    }
    m = std::min({static_cast<std::size_t>(m_cap), smallest_dim, needed});
  }
  if (m < 1) m = 1;

  PcaModel model;
  model.input_dim = d;
  model.m = m;
  model.mean.assign(mu.data(), mu.data() + d);
  model.components.resize(m * d);
  model.explained.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - i);
    for (std::size_t j = 0; j < d; ++j)
      model.components[i * d + j] = vecs(static_cast<Eigen::Index>(j), col);
    model.explained[i] = total > 0.0 ? std::max(vals(col), 0.0) / total : 0.0;
  }
  return model;
}

inline std::vector<double> pca_transform(const PcaModel& model,
                                         const std::vector<double>& x) {
  if (x.size() != model.input_dim)
    throw data_error("pca_transform: dimension mismatch");
  std::vector<double> out(model.m, 0.0);
  for (std::size_t i = 0; i < model.m; ++i) {
    double s = 0.0;
    const double* row = &model.components[i * model.input_dim];
    for (std::size_t j = 0; j < model.input_dim; ++j)
      s += row[j] * (x[j] - model.mean[j]);
    out[i] = s;
  }
  return out;
}

inline std::vector<std::uint8_t> serialize_pca(const PcaModel& m) {
  snap_detail::Writer w;
  snap_detail::write_header(w, kSnapshotPca);
  w.u32(static_cast<std::uint32_t>(m.input_dim));
  w.u32(static_cast<std::uint32_t>(m.m));
  w.f64s(m.mean);
  w.f64s(m.components);
  w.f64s(m.explained);
  return w.bytes();
}

inline PcaModel deserialize_pca(const std::vector<std::uint8_t>& bytes) {
  snap_detail::Reader r(bytes);
  if (snap_detail::read_header(r) != kSnapshotPca)
    throw data_error("snapshot: not a pca snapshot");
  PcaModel m;
  m.input_dim = r.u32();
  m.m = r.u32();
  m.mean = r.f64s(m.input_dim);
  m.components = r.f64s(m.m * m.input_dim);
  m.explained = r.f64s(m.m);
  if (!r.exhausted()) throw data_error("snapshot: trailing bytes");
  return m;
}

inline void save_pca(const std::filesystem::path& p, const PcaModel& m) {
  snap_detail::write_file(p, serialize_pca(m));
}

inline PcaModel load_pca(const std::filesystem::path& p) {
  return deserialize_pca(snap_detail::read_file(p));
}

}  // namespace stam
