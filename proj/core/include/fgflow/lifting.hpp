#pragma once

#include "fgflow/types.hpp"

#include <string>
#include <vector>

namespace fgflow {

struct LabeledDataset {
  std::vector<Vector> features;
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(features.size()); }
  int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
  void validate() const;
};

enum class EmbeddingKind { kIdentity, kPca };

/// phi(x) = projection * (x - center). Rows of the pca projection are
/// orthonormal principal directions with a deterministic sign convention
/// (largest-magnitude entry positive).
struct Embedding {
  EmbeddingKind kind = EmbeddingKind::kIdentity;
  Matrix projection;
  Vector center;
  bool rank_padded = false;  // pca covariance had rank < n; trailing rows are
                             // an arbitrary orthonormal completion

  int in_dim() const { return static_cast<int>(projection.cols()); }
  int out_dim() const { return static_cast<int>(projection.rows()); }
  Vector apply(const Vector& x) const;
};

Embedding fit_embedding(const LabeledDataset& data, EmbeddingKind kind, int n);

/// Per-label embedded moments, sorted by label.
struct ClassMoments {
  struct Entry {
    std::string label;
    Vector mu;
    Matrix sigma;
    int count = 0;
  };
  std::vector<Entry> classes;

  int size() const { return static_cast<int>(classes.size()); }
  int lifted_dim() const { return classes.empty() ? 0 : static_cast<int>(classes[0].mu.size()); }
  const Entry* find(const std::string& label) const;
};

/// Population (1/K) covariance of phi(x) per class, eigenvalue-floored at
/// reg_eps. Single-sample classes get the identity covariance.
ClassMoments class_moments(const LabeledDataset& data, const Embedding& emb, double reg_eps);

/// Particle i = (x_i, mu_{y_i}, sigma_{y_i}); labels are retained.
EmpiricalMeasure lift_dataset(const LabeledDataset& data, const Embedding& emb,
                              const ClassMoments& moments);

}  // namespace fgflow
