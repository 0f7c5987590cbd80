#pragma once

#include "hgr/layers/spectral.hpp"

namespace hgr {

/// Fully connected layer over the row-major flattened d_out x d_out log matrix.
struct FcWeights {
  Matrix F;  // n_classes x d_out^2
  Vector c;  // n_classes

  static FcWeights zeros(int n_classes, int d_out);
  int n_classes() const { return static_cast<int>(F.rows()); }
};

struct HeadContext {
  LogEigContext logeig;
  Vector flat;
  Vector probs;
  Matrix F;
};

struct HeadOutput {
  Vector logits;
  Vector probs;
};

struct HeadGrads {
  SymMatrix d_y;
  Matrix d_F;
  Vector d_c;
};

/// LogEig -> FC -> softmax.
HeadOutput head_forward(const SPDMatrix& y, const FcWeights& fc, HeadContext* ctx = nullptr);

/// Gradients of the cross-entropy of the cached probabilities against `label`.
HeadGrads head_backward(const HeadContext& ctx, int label);

double cross_entropy(const Vector& probs, int label);

Vector softmax(const Vector& logits);

/// sym_vectorize(spd_log(Y)): the log-Euclidean feature vector.
Vector extract_representation(const SPDMatrix& y);

}  // namespace hgr
