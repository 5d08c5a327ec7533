#include "gtex/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtex {
namespace {

// Projects every token of every view: out[n][l] = m * batch[n][l].
std::vector<double> project(const FeatureBatch& batch, const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(batch.views) * batch.tokens * m.rows, 0.0);
  for (int n = 0; n < batch.views; ++n) {
    for (int l = 0; l < batch.tokens; ++l) {
      double* dst = out.data() + (static_cast<std::size_t>(n) * batch.tokens + l) * m.rows;
      for (int r = 0; r < m.rows; ++r) {
        double sum = 0.0;
        for (int k = 0; k < m.cols; ++k) sum += m.at(r, k) * batch.at(n, l, k);
        dst[r] = sum;
      }
    }
  }
  return out;
}

}  // namespace

AttentionResult cross_view_attention(const FeatureBatch& batch, const Matrix& wq, const Matrix& wk, const Matrix& wv) {
  if (batch.views < 1 || batch.tokens < 1) throw std::invalid_argument("attention needs at least one view and token");
  if (batch.values.size() != static_cast<std::size_t>(batch.views) * batch.tokens * batch.dim) {
    throw std::invalid_argument("feature batch size does not match its dims");
  }
  if (wq.cols != batch.dim || wk.cols != batch.dim || wv.cols != batch.dim) {
    throw std::invalid_argument("projection input width does not match feature dim");
  }
  if (wq.rows != wk.rows) throw std::invalid_argument("query and key projections differ in width");
  if (wq.rows < 1 || wv.rows < 1) throw std::invalid_argument("projection output width must be positive");

  const int d = wq.rows;
  const int dv = wv.rows;
  const int keys = batch.views * batch.tokens;
  const auto q = project(batch, wq);
  const auto k = project(batch, wk);
  const auto v = project(batch, wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  AttentionResult result{FeatureBatch(batch.views, batch.tokens, dv), {}};
  result.weights.assign(static_cast<std::size_t>(batch.views),
                        std::vector<double>(static_cast<std::size_t>(batch.tokens) * keys, 0.0));
  std::vector<double> logits(static_cast<std::size_t>(keys));
  for (int n = 0; n < batch.views; ++n) {
    for (int l = 0; l < batch.tokens; ++l) {
      const double* qi = q.data() + (static_cast<std::size_t>(n) * batch.tokens + l) * d;
      double peak = -INFINITY;
      for (int j = 0; j < keys; ++j) {
        const double* kj = k.data() + static_cast<std::size_t>(j) * d;
        double s = 0.0;
        for (int r = 0; r < d; ++r) s += qi[r] * kj[r];
        logits[static_cast<std::size_t>(j)] = s * scale;
        peak = std::max(peak, logits[static_cast<std::size_t>(j)]);
      }
      double total = 0.0;
      for (double& x : logits) {
        x = std::exp(x - peak);
        total += x;
      }
      double* row = result.weights[static_cast<std::size_t>(n)].data() + static_cast<std::size_t>(l) * keys;
      for (int j = 0; j < keys; ++j) row[j] = logits[static_cast<std::size_t>(j)] / total;
      for (int r = 0; r < dv; ++r) {
        double sum = 0.0;
        for (int j = 0; j < keys; ++j) sum += row[j] * v[static_cast<std::size_t>(j) * dv + r];
        result.output.at(n, l, r) = sum;
      }
    }
  }
  return result;
}

Activations group_norm_3d(const Activations& input, int groups, double eps, const std::vector<double>& scale,
                          const std::vector<double>& shift) {
  if (groups < 1 || input.c % groups != 0) throw std::invalid_argument("channel count must be divisible by groups");
  if (input.n < 1) throw std::invalid_argument("group norm needs at least one view");
  if (!scale.empty() && scale.size() != static_cast<std::size_t>(input.c)) throw std::invalid_argument("scale needs one value per channel");
  if (!shift.empty() && shift.size() != static_cast<std::size_t>(input.c)) throw std::invalid_argument("shift needs one value per channel");

  const int per_group = input.c / groups;
  Activations out(input.n, input.c, input.h, input.w);
  for (int g = 0; g < groups; ++g) {
    const int c0 = g * per_group;
    double sum = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < input.n; ++i) {
      for (int ch = c0; ch < c0 + per_group; ++ch) {
        for (int y = 0; y < input.h; ++y) {
          for (int x = 0; x < input.w; ++x) sum += input.at(i, ch, y, x);
        }
      }
    }
    count = static_cast<std::size_t>(input.n) * per_group * input.h * input.w;
    const double mean = sum / static_cast<double>(count);
    double var = 0.0;
    for (int i = 0; i < input.n; ++i) {
      for (int ch = c0; ch < c0 + per_group; ++ch) {
        for (int y = 0; y < input.h; ++y) {
          for (int x = 0; x < input.w; ++x) {
            const double dlt = input.at(i, ch, y, x) - mean;
            var += dlt * dlt;
          }
        }
      }
    }
    var /= static_cast<double>(count);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < input.n; ++i) {
      for (int ch = c0; ch < c0 + per_group; ++ch) {
        const double a = scale.empty() ? 1.0 : scale[static_cast<std::size_t>(ch)];
        const double b = shift.empty() ? 0.0 : shift[static_cast<std::size_t>(ch)];
        for (int y = 0; y < input.h; ++y) {
          for (int x = 0; x < input.w; ++x) out.at(i, ch, y, x) = (input.at(i, ch, y, x) - mean) * inv * a + b;
        }
      }
    }
  }
  return out;
}

}  // namespace gtex
