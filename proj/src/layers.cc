// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lad/layers.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace lad::layers {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

constexpr double kNormEps = 1e-5;

// col[(ci * k + ky) * k + kx][y * w + x] = in[ci][y + ky - r][x + kx - r]
template <typename T>
void Im2Col(std::span<const T> in, int in_c, int h, int w, int kernel,
            std::vector<T>& col) {
  const int r = kernel / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  col.resize(static_cast<std::size_t>(in_c) * kernel * kernel * plane);
  for (int ci = 0; ci < in_c; ++ci) {
    const T* src = in.data() + ci * plane;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        T* dst = col.data() + ((ci * kernel + ky) * kernel + kx) * plane;
        const int dy = ky - r;
        const int dx = kx - r;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        const int y_lo = std::max(0, -dy);
        const int y_hi = std::min(h, h - dy);
        for (int y = 0; y < h; ++y) {
          T* out = dst + y * w;
          if (y < y_lo || y >= y_hi) {
            std::fill(out, out + w, T(0));
            continue;
          }
          const T* row = src + (y + dy) * w + dx;
          std::fill(out, out + x_lo, T(0));
          std::copy(row + x_lo, row + x_hi, out + x_lo);
          std::fill(out + x_hi, out + w, T(0));
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const std::vector<T>& col, int in_c, int h, int w, int kernel,
               std::span<T> grad_in) {
  const int r = kernel / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < in_c; ++ci) {
    T* dst = grad_in.data() + ci * plane;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const T* src = col.data() + ((ci * kernel + ky) * kernel + kx) * plane;
        const int dy = ky - r;
        const int dx = kx - r;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
          T* row = dst + (y + dy) * w + dx;
          const T* in = src + y * w;
          for (int x = x_lo; x < x_hi; ++x) row[x] += in[x];
        }
      }
    }
  }
}

// Sum of f(0..n-1) over four interleaved double accumulators. The order is
// fixed, so results do not depend on alignment, and the lanes vectorize.
template <typename F>
double LaneSum(std::size_t n, F f) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += f(i);
    a1 += f(i + 1);
    a2 += f(i + 2);
    a3 += f(i + 3);
  }
  for (; i < n; ++i) a0 += f(i);
  return (a0 + a1) + (a2 + a3);
}

template <typename T>
std::vector<T>& Scratch() {
  thread_local std::vector<T> buffer;
  return buffer;
}

}  // namespace

template <typename T>
void Conv2dForward(std::span<const T> in, int in_c, int h, int w,
                   std::span<const T> weight, std::span<const T> bias,
                   int out_c, int kernel, std::span<T> out) {
  const int plane = h * w;
  const int patch = in_c * kernel * kernel;
  ConstMatrixMap<T> wmat(weight.data(), out_c, patch);
  MatrixMap<T> omat(out.data(), out_c, plane);
  if (kernel == 1) {
    omat.noalias() = wmat * ConstMatrixMap<T>(in.data(), in_c, plane);
  } else {
    std::vector<T>& col = Scratch<T>();
    Im2Col(in, in_c, h, w, kernel, col);
    omat.noalias() = wmat * ConstMatrixMap<T>(col.data(), patch, plane);
  }
  for (int o = 0; o < out_c; ++o) omat.row(o).array() += bias[o];
}

template <typename T>
void Conv2dBackward(std::span<const T> in, int in_c, int h, int w,
                    std::span<const T> weight, int out_c, int kernel,
                    std::span<const T> grad_out, std::span<T> grad_weight,
                    std::span<T> grad_bias, std::span<T> grad_in) {
  const int plane = h * w;
  const int patch = in_c * kernel * kernel;
  ConstMatrixMap<T> wmat(weight.data(), out_c, patch);
  ConstMatrixMap<T> gout(grad_out.data(), out_c, plane);
  MatrixMap<T> gw(grad_weight.data(), out_c, patch);
  // Plain loop: Eigen's vectorized sum() peels by pointer alignment, which
  // would make results depend on where the buffer happens to live.
  for (int o = 0; o < out_c; ++o) {
    double acc = 0.0;
    for (int i = 0; i < plane; ++i) acc += grad_out[static_cast<std::size_t>(o) * plane + i];
    grad_bias[o] += static_cast<T>(acc);
  }
  if (kernel == 1) {
    ConstMatrixMap<T> x(in.data(), in_c, plane);
    gw.noalias() += gout * x.transpose();
    if (!grad_in.empty()) {
      MatrixMap<T>(grad_in.data(), in_c, plane).noalias() =
          wmat.transpose() * gout;
    }
    return;
  }
  std::vector<T>& col = Scratch<T>();
  Im2Col(in, in_c, h, w, kernel, col);
  gw.noalias() += gout * ConstMatrixMap<T>(col.data(), patch, plane).transpose();
  if (grad_in.empty()) return;
  MatrixMap<T>(col.data(), patch, plane).noalias() = wmat.transpose() * gout;
  std::fill(grad_in.begin(), grad_in.end(), T(0));
  Col2ImAdd(col, in_c, h, w, kernel, grad_in);
}

template <typename T>
void GroupNormForward(std::span<const T> in, int channels, int plane,
                      int groups, std::span<const T> gamma,
                      std::span<const T> beta, std::span<T> out,
                      std::span<T> xhat, std::span<T> rstd) {
  const int per_group = channels / groups;
  const std::size_t count = static_cast<std::size_t>(per_group) * plane;
  for (int g = 0; g < groups; ++g) {
    const std::size_t begin = g * count;
    const double mean =
        LaneSum(count, [&](std::size_t i) { return double(in[begin + i]); }) / count;
    const double var = LaneSum(count, [&](std::size_t i) {
                         const double d = in[begin + i] - mean;
                         return d * d;
                       }) / count;
    const T inv = static_cast<T>(1.0 / std::sqrt(var + kNormEps));
    rstd[g] = inv;
    for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
      const std::size_t off = static_cast<std::size_t>(c) * plane;
      for (int i = 0; i < plane; ++i) {
        T xn = static_cast<T>(in[off + i] - mean) * inv;
        xhat[off + i] = xn;
        out[off + i] = gamma[c] * xn + beta[c];
      }
    }
  }
}

template <typename T>
void GroupNormBackward(std::span<const T> grad_out, int channels, int plane,
                       int groups, std::span<const T> gamma,
                       std::span<const T> xhat, std::span<const T> rstd,
                       std::span<T> grad_gamma, std::span<T> grad_beta,
                       std::span<T> grad_in) {
  const int per_group = channels / groups;
  const double count = static_cast<double>(per_group) * plane;
  std::vector<double> gg(channels), gb(channels);
  for (int c = 0; c < channels; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * plane;
    gg[c] = LaneSum(plane, [&](std::size_t i) {
      return double(grad_out[off + i]) * xhat[off + i];
    });
    gb[c] = LaneSum(plane, [&](std::size_t i) { return double(grad_out[off + i]); });
    grad_gamma[c] += static_cast<T>(gg[c]);
    grad_beta[c] += static_cast<T>(gb[c]);
  }
  // dx = rstd / N * (N * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)),
  // with dxhat = gamma * dy, so both sums follow from gg and gb.
  for (int g = 0; g < groups; ++g) {
    double sum_d = 0.0, sum_dx = 0.0;
    for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
      sum_d += gamma[c] * gb[c];
      sum_dx += gamma[c] * gg[c];
    }
    const double mean_d = sum_d / count;
    const double mean_dx = sum_dx / count;
    for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
      const std::size_t off = static_cast<std::size_t>(c) * plane;
      for (int i = 0; i < plane; ++i) {
        double d = grad_out[off + i] * gamma[c];
        grad_in[off + i] =
            static_cast<T>(rstd[g] * (d - mean_d - xhat[off + i] * mean_dx));
      }
    }
  }
}

template <typename T>
void ReluInPlace(std::span<T> x) {
  for (T& v : x) v = v > T(0) ? v : T(0);
}

template <typename T>
void ReluBackwardInPlace(std::span<const T> out, std::span<T> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(out[i] > T(0))) grad[i] = T(0);
  }
}

template <typename T>
void MaxPool2Forward(std::span<const T> in, int channels, int h, int w,
                     std::span<T> out, std::span<std::int32_t> argmax) {
  const int oh = h / 2, ow = w / 2;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        std::int32_t best = (c * h + 2 * y) * w + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            std::int32_t idx = (c * h + 2 * y + dy) * w + 2 * x + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (static_cast<std::size_t>(c) * oh + y) * ow + x;
        out[o] = in[best];
        argmax[o] = best;
      }
    }
  }
}

template <typename T>
void MaxPool2Backward(std::span<const T> grad_out,
                      std::span<const std::int32_t> argmax,
                      std::span<T> grad_in) {
  std::fill(grad_in.begin(), grad_in.end(), T(0));
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_in[argmax[i]] += grad_out[i];
  }
}

namespace {

struct Tap {
  int lo, hi;
  double frac;  // weight of hi
};

// Source coordinate of output index o for a 2x half-pixel resize.
Tap UpsampleTap(int o, int n) {
  double src = std::max(0.0, (o + 0.5) / 2.0 - 0.5);
  int lo = std::min(static_cast<int>(src), n - 1);
  int hi = std::min(lo + 1, n - 1);
  return {lo, hi, src - lo};
}

}  // namespace

template <typename T>
void Upsample2Forward(std::span<const T> in, int channels, int h, int w,
                      std::span<T> out) {
  const int oh = 2 * h, ow = 2 * w;
  std::vector<Tap> xs(ow), ys(oh);
  for (int x = 0; x < ow; ++x) xs[x] = UpsampleTap(x, w);
  for (int y = 0; y < oh; ++y) ys[y] = UpsampleTap(y, h);
  // Rows are interpolated horizontally once, then blended vertically.
  std::vector<T> rows(static_cast<std::size_t>(h) * ow);
  for (int c = 0; c < channels; ++c) {
    const T* src = in.data() + static_cast<std::size_t>(c) * h * w;
    T* dst = out.data() + static_cast<std::size_t>(c) * oh * ow;
    for (int y = 0; y < h; ++y) {
      const T* r = src + y * w;
      T* row = rows.data() + y * ow;
      for (int x = 0; x < ow; ++x) {
        const T fx = static_cast<T>(xs[x].frac);
        row[x] = r[xs[x].lo] * (T(1) - fx) + r[xs[x].hi] * fx;
      }
    }
    for (int y = 0; y < oh; ++y) {
      const T* top = rows.data() + ys[y].lo * ow;
      const T* bottom = rows.data() + ys[y].hi * ow;
      const T fy = static_cast<T>(ys[y].frac);
      T* o = dst + y * ow;
      for (int x = 0; x < ow; ++x) o[x] = top[x] * (T(1) - fy) + bottom[x] * fy;
    }
  }
}

template <typename T>
void Upsample2Backward(std::span<const T> grad_out, int channels, int h, int w,
                       std::span<T> grad_in) {
  const int oh = 2 * h, ow = 2 * w;
  std::vector<Tap> xs(ow), ys(oh);
  for (int x = 0; x < ow; ++x) xs[x] = UpsampleTap(x, w);
  for (int y = 0; y < oh; ++y) ys[y] = UpsampleTap(y, h);
  std::vector<T> rows(static_cast<std::size_t>(h) * ow);
  for (int c = 0; c < channels; ++c) {
    const T* src = grad_out.data() + static_cast<std::size_t>(c) * oh * ow;
    T* dst = grad_in.data() + static_cast<std::size_t>(c) * h * w;
    std::fill(rows.begin(), rows.end(), T(0));
    for (int y = 0; y < oh; ++y) {
      T* top = rows.data() + ys[y].lo * ow;
      T* bottom = rows.data() + ys[y].hi * ow;
      const T fy = static_cast<T>(ys[y].frac);
      const T* g = src + y * ow;
      for (int x = 0; x < ow; ++x) {
        top[x] += g[x] * (T(1) - fy);
        bottom[x] += g[x] * fy;
      }
    }
    std::fill(dst, dst + static_cast<std::size_t>(h) * w, T(0));
    for (int y = 0; y < h; ++y) {
      const T* row = rows.data() + y * ow;
      T* r = dst + y * w;
      for (int x = 0; x < ow; ++x) {
        const T fx = static_cast<T>(xs[x].frac);
        r[xs[x].lo] += row[x] * (T(1) - fx);
        r[xs[x].hi] += row[x] * fx;
      }
    }
  }
}

#define LAD_INSTANTIATE_LAYERS(T)                                             \
  template void Conv2dForward<T>(std::span<const T>, int, int, int,           \
                                 std::span<const T>, std::span<const T>, int, \
                                 int, std::span<T>);                          \
  template void Conv2dBackward<T>(std::span<const T>, int, int, int,          \
                                  std::span<const T>, int, int,               \
                                  std::span<const T>, std::span<T>,           \
                                  std::span<T>, std::span<T>);                \
  template void GroupNormForward<T>(std::span<const T>, int, int, int,        \
                                    std::span<const T>, std::span<const T>,   \
                                    std::span<T>, std::span<T>, std::span<T>); \
  template void GroupNormBackward<T>(                                         \
      std::span<const T>, int, int, int, std::span<const T>,                  \
      std::span<const T>, std::span<const T>, std::span<T>, std::span<T>,     \
      std::span<T>);                                                          \
  template void ReluInPlace<T>(std::span<T>);                                 \
  template void ReluBackwardInPlace<T>(std::span<const T>, std::span<T>);     \
  template void MaxPool2Forward<T>(std::span<const T>, int, int, int,         \
                                   std::span<T>, std::span<std::int32_t>);    \
  template void MaxPool2Backward<T>(std::span<const T>,                       \
                                    std::span<const std::int32_t>,            \
                                    std::span<T>);                            \
  template void Upsample2Forward<T>(std::span<const T>, int, int, int,        \
                                    std::span<T>);                            \
  template void Upsample2Backward<T>(std::span<const T>, int, int, int,       \
                                     std::span<T>);

LAD_INSTANTIATE_LAYERS(float)
LAD_INSTANTIATE_LAYERS(double)

#undef LAD_INSTANTIATE_LAYERS

}  // namespace lad::layers
