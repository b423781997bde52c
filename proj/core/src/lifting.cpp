#include "fgflow/lifting.hpp"

#include "fgflow/manifold.hpp"

#include <algorithm>
#include <map>

namespace fgflow {

void LabeledDataset::validate() const {
  if (features.empty()) throw DimensionError("dataset is empty");
  if (features.size() != labels.size()) {
    throw DimensionError("feature and label lists differ in length");
  }
  const auto dim = features[0].size();
  for (const Vector& f : features) {
    if (f.size() != dim) throw DimensionError("features do not share a dimension");
  }
}

Vector Embedding::apply(const Vector& x) const {
  if (x.size() != projection.cols()) {
    throw DimensionError("embedding: feature dimension mismatch");
  }
  return projection * (x - center);
}

Embedding fit_embedding(const LabeledDataset& data, EmbeddingKind kind, int n) {
  data.validate();
  const int m = data.feature_dim();

  Embedding emb;
  emb.kind = kind;
  if (kind == EmbeddingKind::kIdentity) {
    emb.projection = Matrix::Identity(m, m);
    emb.center = Vector::Zero(m);
    return emb;
  }

  if (n > m) throw DimensionError("pca: n exceeds the feature dimension");
  if (n < 1) throw DimensionError("pca: n must be at least 1");

  Vector mean = Vector::Zero(m);
  for (const Vector& f : data.features) mean += f;
  mean /= static_cast<double>(data.size());

  Matrix cov = Matrix::Zero(m, m);
  for (const Vector& f : data.features) {
    const Vector c = f - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(data.size());

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  // eigenvalues ascend; take the top n directions.
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > 1e-12 * scale) ++rank;
  }

  emb.center = mean;
  emb.projection = Matrix(n, m);
  for (int r = 0; r < n; ++r) {
    Vector dir = es.eigenvectors().col(m - 1 - r);
    // sign convention: the largest-magnitude entry is positive
    Eigen::Index imax = 0;
    dir.cwiseAbs().maxCoeff(&imax);
    if (dir(imax) < 0.0) dir = -dir;
    emb.projection.row(r) = dir.transpose();
  }
  // eigenvectors of (near-)zero eigenvalues are still orthonormal, so a
  // deficient covariance simply leaves the trailing rows arbitrary
  emb.rank_padded = rank < n;
  return emb;
}

const ClassMoments::Entry* ClassMoments::find(const std::string& label) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), label,
                             [](const Entry& e, const std::string& l) { return e.label < l; });
  if (it == classes.end() || it->label != label) return nullptr;
  return &*it;
}

ClassMoments class_moments(const LabeledDataset& data, const Embedding& emb, double reg_eps) {
  data.validate();
  const int n = emb.out_dim();

  std::map<std::string, std::vector<Vector>> embedded;
  for (int i = 0; i < data.size(); ++i) {
    embedded[data.labels[static_cast<size_t>(i)]].push_back(emb.apply(data.features[static_cast<size_t>(i)]));
  }

  ClassMoments out;
  out.classes.reserve(embedded.size());
  for (const auto& [label, points] : embedded) {
    ClassMoments::Entry entry;
    entry.label = label;
    entry.count = static_cast<int>(points.size());

    Vector mu = Vector::Zero(n);
    for (const Vector& q : points) mu += q;
    mu /= static_cast<double>(points.size());
    entry.mu = mu;

    if (points.size() == 1) {
      // one-shot rule: identity covariance
      entry.sigma = Matrix::Identity(n, n);
    } else {
      Matrix cov = Matrix::Zero(n, n);
      for (const Vector& q : points) {
        const Vector c = q - mu;
        cov += c * c.transpose();
      }
      cov /= static_cast<double>(points.size());
      entry.sigma = spd_regularize(symmetrize(cov), reg_eps);
    }
    out.classes.push_back(std::move(entry));
  }
  return out;
}

EmpiricalMeasure lift_dataset(const LabeledDataset& data, const Embedding& emb,
                              const ClassMoments& moments) {
  data.validate();
  if (moments.size() > 0 && emb.out_dim() != moments.lifted_dim()) {
    throw DimensionError("lift_dataset: embedding and moments disagree on n");
  }
  EmpiricalMeasure measure;
  measure.particles.reserve(data.features.size());
  measure.labels = data.labels;
  for (int i = 0; i < data.size(); ++i) {
    const std::string& label = data.labels[static_cast<size_t>(i)];
    const ClassMoments::Entry* entry = moments.find(label);
    if (entry == nullptr) {
      throw std::invalid_argument("lift_dataset: unknown label '" + label + "'");
    }
    measure.particles.push_back({data.features[static_cast<size_t>(i)], entry->mu, entry->sigma});
  }
  return measure;
}

}  // namespace fgflow
