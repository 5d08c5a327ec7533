#pragma once

#include <cstddef>
#include <vector>

namespace gtex {

// N views x L tokens x D features, row-major.
struct FeatureBatch {
  int views = 0;
  int tokens = 0;
  int dim = 0;
  std::vector<double> values;

  FeatureBatch() = default;
  FeatureBatch(int n, int l, int d) : views(n), tokens(l), dim(d), values(static_cast<std::size_t>(n) * l * d, 0.0) {}

  double& at(int n, int l, int k) { return values[(static_cast<std::size_t>(n) * tokens + l) * dim + k]; }
  double at(int n, int l, int k) const { return values[(static_cast<std::size_t>(n) * tokens + l) * dim + k]; }
};

// Row-major rows x cols matrix applied to column feature vectors (out = M * x).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct AttentionResult {
  FeatureBatch output;
  // Attention weights per view: [n][query * (N * L) + key].
  std::vector<std::vector<double>> weights;
};

// Single-head attention where each view's queries attend to the keys and values of all views'
// tokens concatenated. With one view this is ordinary self-attention.
AttentionResult cross_view_attention(const FeatureBatch& batch, const Matrix& wq, const Matrix& wk, const Matrix& wv);

// N x C x H x W activations, row-major.
struct Activations {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> values;

  Activations() = default;
  Activations(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), values(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

  double& at(int i, int ch, int y, int x) {
    return values[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
  double at(int i, int ch, int y, int x) const {
    return values[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
};

// Group normalization whose statistics pool each channel group over all pixels of all views.
// Empty scale/shift mean identity affine.
Activations group_norm_3d(const Activations& input, int groups, double eps = 1e-5, const std::vector<double>& scale = {},
                          const std::vector<double>& shift = {});

}  // namespace gtex
