// Copyright 2026 The splatphys Authors.
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

#include "splatphys/ops.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "splatphys/linalg.hpp"

namespace splatphys {

namespace {

// Flat input offsets for every output element of a broadcast.
struct BroadcastPlan {
  Shape out;
  bool a_same = false;
  bool b_same = false;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
};

std::vector<std::size_t> broadcast_index(const Shape& in, const Shape& out) {
  const std::size_t rank = out.size();
  const std::size_t offset = rank - in.size();
  std::vector<std::size_t> stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t k = in.size(); k-- > 0;) {
    stride[k + offset] = in[k] == 1 ? 0 : s;
    s *= in[k];
  }
  const std::size_t n = shape_size(out);
  std::vector<std::size_t> index(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    index[i] = flat;
    for (std::size_t k = rank; k-- > 0;) {
      ++counter[k];
      flat += stride[k];
      if (counter[k] < out[k]) break;
      flat -= stride[k] * counter[k];
      counter[k] = 0;
    }
  }
  return index;
}

std::shared_ptr<const BroadcastPlan> plan_broadcast(const Tensor& a,
                                                    const Tensor& b,
                                                    const char* op) {
  auto plan = std::make_shared<BroadcastPlan>();
  plan->out = broadcast_shape(a.shape(), b.shape(), op);
  plan->a_same = a.shape() == plan->out;
  plan->b_same = b.shape() == plan->out;
  if (!plan->a_same) plan->a_index = broadcast_index(a.shape(), plan->out);
  if (!plan->b_same) plan->b_index = broadcast_index(b.shape(), plan->out);
  return plan;
}

// Elementwise binary op; `da`/`db` give the partials at (a, b).
template <typename F, typename DA, typename DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F f, DA da,
              DB db) {
  auto plan = plan_broadcast(a, b, name);
  const std::size_t n = shape_size(plan->out);
  std::vector<double> out(n);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[plan->a_same ? i : plan->a_index[i]];
    const double y = bv[plan->b_same ? i : plan->b_index[i]];
    out[i] = f(x, y);
  }
  Tensor result(plan->out, std::move(out));
  if (!a.attached() && !b.attached()) return result;
  return record_op(
      name, std::move(result), {&a, &b},
      [plan, av, bv, da, db](std::span<const double> g,
                             std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t ia = plan->a_same ? i : plan->a_index[i];
          const std::size_t ib = plan->b_same ? i : plan->b_index[i];
          if (!gin[0].empty()) gin[0][ia] += g[i] * da(av[ia], bv[ib]);
          if (!gin[1].empty()) gin[1][ib] += g[i] * db(av[ia], bv[ib]);
        }
      });
}

// Elementwise unary op; `df(x, y)` is the derivative given input and output.
template <typename F, typename DF>
Tensor unary(const char* name, const Tensor& x, F f, DF df) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  Tensor result(x.shape(), out);
  if (!x.attached()) return result;
  return record_op(name, std::move(result), {&x},
                   [xv, y = std::move(out), df](
                       std::span<const double> g,
                       std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       gin[0][i] += g[i] * df(xv[i], y[i]);
                     }
                   });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t da = k < rank - a.size() ? 1 : a[k - (rank - a.size())];
    const std::size_t db = k < rank - b.size() ? 1 : b[k - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast shapes " +
                       shape_string(a) + " and " + shape_string(b));
    }
    out[k] = da == 1 ? db : da;
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor neg(const Tensor& x) {
  return unary(
      "neg", x, [](double v) { return -v; },
      [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
  return unary(
      "add_scalar", x, [offset](double v) { return v + offset; },
      [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor sin(const Tensor& x) {
  return unary(
      "sin", x, [](double v) { return std::sin(v); },
      [](double v, double) { return std::cos(v); });
}

Tensor cos(const Tensor& x) {
  return unary(
      "cos", x, [](double v) { return std::cos(v); },
      [](double v, double) { return -std::sin(v); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
  return unary("softplus", x, stable_softplus,
               [](double v, double) { return stable_sigmoid(v); });
}

// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return record_op("sum", Tensor::scalar(total), {&x},
                   [](std::span<const double> g,
                      std::span<const std::span<double>> gin) {
                     for (double& v : gin[0]) v += g[0];
                   });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("sum: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_string(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= x.shape()[k];
  for (std::size_t k = axis + 1; k < x.rank(); ++k) inner *= x.shape()[k];
  const std::size_t n = x.shape()[axis];
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(outer * inner, 0.0);
  const auto& xv = x.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < inner; ++i)
        out[o * inner + i] += xv[(o * n + k) * inner + i];
  return record_op("sum_axis", Tensor(std::move(out_shape), std::move(out)),
                   {&x},
                   [outer, inner, n](std::span<const double> g,
                                     std::span<const std::span<double>> gin) {
                     for (std::size_t o = 0; o < outer; ++o)
                       for (std::size_t k = 0; k < n; ++k)
                         for (std::size_t i = 0; i < inner; ++i)
                           gin[0][(o * n + k) * inner + i] += g[o * inner + i];
                   });
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  auto fail = [&] {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  };
  std::size_t batch = 1;
  bool b_shared = false;
  if (a.rank() == 2 && b.rank() == 2) {
    b_shared = true;
  } else if (a.rank() == 3 && b.rank() == 3) {
    if (a.dim(0) != b.dim(0)) fail();
    batch = a.dim(0);
  } else if (a.rank() == 3 && b.rank() == 2) {
    batch = a.dim(0);
    b_shared = true;
  } else {
    fail();
  }
  const std::size_t m = a.shape()[a.rank() - 2];
  const std::size_t k = a.shape()[a.rank() - 1];
  const std::size_t kb = b.shape()[b.rank() - 2];
  const std::size_t n = b.shape()[b.rank() - 1];
  if (k != kb) fail();

  Shape out_shape = a.rank() == 3 ? Shape{batch, m, n} : Shape{m, n};
  std::vector<double> out(batch * m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  const std::size_t b_stride = b_shared ? 0 : k * n;
  for (std::size_t t = 0; t < batch; ++t) {
    const double* ap = av.data() + t * m * k;
    const double* bp = bv.data() + t * b_stride;
    double* op = out.data() + t * m * n;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t l = 0; l < k; ++l) {
        const double s = ap[i * k + l];
        for (std::size_t j = 0; j < n; ++j) op[i * n + j] += s * bp[l * n + j];
      }
  }
  if (!a.attached() && !b.attached()) {
    return Tensor(std::move(out_shape), std::move(out));
  }
  return record_op(
      "matmul", Tensor(std::move(out_shape), std::move(out)), {&a, &b},
      [av, bv, batch, m, k, n, b_stride](
          std::span<const double> g, std::span<const std::span<double>> gin) {
        for (std::size_t t = 0; t < batch; ++t) {
          const double* ap = av.data() + t * m * k;
          const double* bp = bv.data() + t * b_stride;
          const double* gp = g.data() + t * m * n;
          // dA = G B^T, dB = A^T G.
          if (!gin[0].empty()) {
            double* ga = gin[0].data() + t * m * k;
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t l = 0; l < k; ++l) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                  acc += gp[i * n + j] * bp[l * n + j];
                ga[i * k + l] += acc;
              }
          }
          if (!gin[1].empty()) {
            double* gb = gin[1].data() + t * b_stride;
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t l = 0; l < k; ++l) {
                const double s = ap[i * k + l];
                for (std::size_t j = 0; j < n; ++j)
                  gb[l * n + j] += s * gp[i * n + j];
              }
          }
        }
      });
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 3) {
    throw ShapeError("transpose: expected rank 2 or 3, got " +
                     shape_string(x.shape()));
  }
  const std::size_t batch = x.rank() == 3 ? x.dim(0) : 1;
  const std::size_t r = x.shape()[x.rank() - 2];
  const std::size_t c = x.shape()[x.rank() - 1];
  Shape out_shape = x.rank() == 3 ? Shape{batch, c, r} : Shape{c, r};
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t t = 0; t < batch; ++t)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out[t * r * c + j * r + i] = xv[t * r * c + i * c + j];
  return record_op("transpose", Tensor(std::move(out_shape), std::move(out)),
                   {&x},
                   [batch, r, c](std::span<const double> g,
                                 std::span<const std::span<double>> gin) {
                     for (std::size_t t = 0; t < batch; ++t)
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j)
                           gin[0][t * r * c + i * c + j] +=
                               g[t * r * c + j * r + i];
                   });
}

Tensor reshape(const Tensor& x, Shape shape) {
  return x.reshaped(std::move(shape));
}

// ---------------------------------------------------------------------------

Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() == 0 || begin >= end || end > x.shape().back()) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for shape " +
                     shape_string(x.shape()));
  }
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  const std::size_t w = end - begin;
  Shape out_shape = x.shape();
  out_shape.back() = w;
  std::vector<double> out(rows * w);
  const auto& xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < w; ++j) out[r * w + j] = xv[r * width + begin + j];
  return record_op("slice_last", Tensor(std::move(out_shape), std::move(out)),
                   {&x},
                   [rows, w, width, begin](
                       std::span<const double> g,
                       std::span<const std::span<double>> gin) {
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t j = 0; j < w; ++j)
                         gin[0][r * width + begin + j] += g[r * w + j];
                   });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  const Shape& first = parts.front().shape();
  if (first.empty()) throw ShapeError("concat_last: scalar input");
  const std::size_t rows = parts.front().size() / first.back();
  std::vector<std::size_t> widths, offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size() ||
        !std::equal(first.begin(), first.end() - 1, p.shape().begin())) {
      throw ShapeError("concat_last: leading dimensions differ: " +
                       shape_string(first) + " vs " + shape_string(p.shape()));
    }
    offsets.push_back(total);
    widths.push_back(p.shape().back());
    total += p.shape().back();
  }
  Shape out_shape = first;
  out_shape.back() = total;
  std::vector<double> out(rows * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].values();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[r * total + offsets[k] + j] = pv[r * widths[k] + j];
  }
  std::vector<const Tensor*> inputs;
  for (const Tensor& p : parts) inputs.push_back(&p);
  return record_op("concat_last", Tensor(std::move(out_shape), std::move(out)),
                   inputs,
                   [rows, total, widths, offsets](
                       std::span<const double> g,
                       std::span<const std::span<double>> gin) {
                     for (std::size_t k = 0; k < gin.size(); ++k) {
                       if (gin[k].empty()) continue;
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t j = 0; j < widths[k]; ++j)
                           gin[k][r * widths[k] + j] +=
                               g[r * total + offsets[k] + j];
                     }
                   });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices) {
  if (x.rank() == 0) throw ShapeError("gather_rows: scalar input");
  const std::size_t n = x.dim(0);
  const std::size_t row = n ? x.size() / n : 0;
  Shape out_shape = x.shape();
  out_shape[0] = indices.size();
  std::vector<double> out(indices.size() * row);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[i]) +
                       " out of range for shape " + shape_string(x.shape()));
    }
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(indices[i] * row), row,
                out.begin() + static_cast<std::ptrdiff_t>(i * row));
  }
  return record_op("gather_rows", Tensor(std::move(out_shape), std::move(out)),
                   {&x},
                   [indices, row](std::span<const double> g,
                                  std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < indices.size(); ++i)
                       for (std::size_t j = 0; j < row; ++j)
                         gin[0][indices[i] * row + j] += g[i * row + j];
                   });
}

Tensor scatter_add_rows(const Tensor& base,
                        const std::vector<std::size_t>& indices,
                        const Tensor& values) {
  if (base.rank() == 0) throw ShapeError("scatter_add_rows: scalar base");
  const std::size_t n = base.dim(0);
  const std::size_t row = n ? base.size() / n : 0;
  Shape expected = base.shape();
  expected[0] = indices.size();
  if (values.shape() != expected) {
    throw ShapeError("scatter_add_rows: values shape " +
                     shape_string(values.shape()) + " != expected " +
                     shape_string(expected));
  }
  std::vector<double> out = base.values();
  const auto& vv = values.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) {
      throw ShapeError("scatter_add_rows: index " + std::to_string(indices[i]) +
                       " out of range for shape " +
                       shape_string(base.shape()));
    }
    for (std::size_t j = 0; j < row; ++j)
      out[indices[i] * row + j] += vv[i * row + j];
  }
  return record_op("scatter_add_rows", Tensor(base.shape(), std::move(out)),
                   {&base, &values},
                   [indices, row](std::span<const double> g,
                                  std::span<const std::span<double>> gin) {
                     if (!gin[0].empty())
                       for (std::size_t i = 0; i < g.size(); ++i)
                         gin[0][i] += g[i];
                     if (!gin[1].empty())
                       for (std::size_t i = 0; i < indices.size(); ++i)
                         for (std::size_t j = 0; j < row; ++j)
                           gin[1][i * row + j] += g[indices[i] * row + j];
                   });
}

Tensor cross_rows(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || a.dim(1) != 3 || a.shape() != b.shape()) {
    throw ShapeError("cross_rows: expected two (n, 3) tensors, got " +
                     shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const std::size_t n = a.dim(0);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x(av[3 * i], av[3 * i + 1], av[3 * i + 2]);
    const Vec3 y(bv[3 * i], bv[3 * i + 1], bv[3 * i + 2]);
    const Vec3 c = x.cross(y);
    for (int k = 0; k < 3; ++k) out[3 * i + k] = c[k];
  }
  return record_op("cross_rows", Tensor(a.shape(), std::move(out)), {&a, &b},
                   [av, bv, n](std::span<const double> g,
                               std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < n; ++i) {
                       const Vec3 x(av[3 * i], av[3 * i + 1], av[3 * i + 2]);
                       const Vec3 y(bv[3 * i], bv[3 * i + 1], bv[3 * i + 2]);
                       const Vec3 gc(g[3 * i], g[3 * i + 1], g[3 * i + 2]);
                       // d(x cross y) = dx cross y + x cross dy.
                       const Vec3 gx = y.cross(gc);
                       const Vec3 gy = gc.cross(x);
                       for (int k = 0; k < 3; ++k) {
                         if (!gin[0].empty()) gin[0][3 * i + k] += gx[k];
                         if (!gin[1].empty()) gin[1][3 * i + k] += gy[k];
                       }
                     }
                   });
}

// ---------------------------------------------------------------------------

std::pair<Tensor, Tensor> polar_decompose(const Tensor& f) {
  const bool batched = f.rank() == 3;
  if (!((f.rank() == 2 && f.dim(0) == 3 && f.dim(1) == 3) ||
        (batched && f.dim(1) == 3 && f.dim(2) == 3))) {
    throw ShapeError("polar_decompose: expected (3, 3) or (n, 3, 3), got " +
                     shape_string(f.shape()));
  }
  const std::size_t n = batched ? f.dim(0) : 1;
  auto factors = std::make_shared<std::vector<PolarResult>>(n);
  std::vector<double> r(9 * n), s(9 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mat3 fi = load_mat3(f.data().subspan(9 * i, 9));
    (*factors)[i] = splatphys::polar_decompose(fi);
    store_mat3((*factors)[i].rotation, std::span<double>(r).subspan(9 * i, 9));
    store_mat3((*factors)[i].stretch, std::span<double>(s).subspan(9 * i, 9));
  }
  Tensor rot = record_op(
      "polar_rotation", Tensor(f.shape(), std::move(r)), {&f},
      [factors](std::span<const double> g,
                std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < factors->size(); ++i) {
          const auto& pr = (*factors)[i];
          add_mat3(polar_backward(pr.rotation, pr.stretch,
                                  load_mat3(g.subspan(9 * i, 9)),
                                  Mat3::Zero()),
                   gin[0].subspan(9 * i, 9));
        }
      });
  Tensor stretch = record_op(
      "polar_stretch", Tensor(f.shape(), std::move(s)), {&f},
      [factors](std::span<const double> g,
                std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < factors->size(); ++i) {
          const auto& pr = (*factors)[i];
          add_mat3(polar_backward(pr.rotation, pr.stretch, Mat3::Zero(),
                                  load_mat3(g.subspan(9 * i, 9))),
                   gin[0].subspan(9 * i, 9));
        }
      });
  return {std::move(rot), std::move(stretch)};
}

}  // namespace splatphys
