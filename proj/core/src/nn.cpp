#include "senti/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "senti/error.hpp"

namespace senti::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Upper bound on the im2col scratch buffer, in elements.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

int conv_extent(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// Range of output columns whose input column (o * stride - pad + k) lies in [0, in).
std::pair<int, int> valid_range(int out, int in, int stride, int pad, int k) {
  int lo = 0;
  while (lo < out && lo * stride - pad + k < 0) ++lo;
  int hi = out;
  while (hi > lo && (hi - 1) * stride - pad + k >= in) --hi;
  return {lo, hi};
}

template <typename T>
void im2col(const Conv<T>& conv, const Tensor<T>& x, int row_begin, int row_end, int out_w,
            T* col) {
  const int k = conv.kernel;
  const int s = conv.stride;
  const int p = conv.pad;
  const int h = x.height();
  const int w = x.width();
  const std::size_t n = static_cast<std::size_t>(row_end - row_begin) * out_w;
  for (int ci = 0; ci < conv.in_channels; ++ci) {
    const T* plane = x.data() + ci * x.plane();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + (static_cast<std::size_t>((ci * k + ky) * k + kx)) * n;
        const auto [lo, hi] = valid_range(out_w, w, s, p, kx);
        for (int oy = row_begin; oy < row_end; ++oy) {
          T* out_row = dst + static_cast<std::size_t>(oy - row_begin) * out_w;
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= h) {
            std::fill(out_row, out_row + out_w, T(0));
            continue;
          }
          const T* in_row = plane + static_cast<std::size_t>(iy) * w;
          std::fill(out_row, out_row + lo, T(0));
          if (s == 1) {
            std::copy(in_row + lo - p + kx, in_row + hi - p + kx, out_row + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) out_row[ox] = in_row[ox * s - p + kx];
          }
          std::fill(out_row + hi, out_row + out_w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const Conv<T>& conv, const T* col, int row_begin, int row_end, int out_w,
                Tensor<T>& dx) {
  const int k = conv.kernel;
  const int s = conv.stride;
  const int p = conv.pad;
  const int h = dx.height();
  const int w = dx.width();
  const std::size_t n = static_cast<std::size_t>(row_end - row_begin) * out_w;
  for (int ci = 0; ci < conv.in_channels; ++ci) {
    T* plane = dx.data() + ci * dx.plane();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + (static_cast<std::size_t>((ci * k + ky) * k + kx)) * n;
        const auto [lo, hi] = valid_range(out_w, w, s, p, kx);
        for (int oy = row_begin; oy < row_end; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= h) continue;
          const T* grad_row = src + static_cast<std::size_t>(oy - row_begin) * out_w;
          T* in_row = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = lo; ox < hi; ++ox) in_row[ox * s - p + kx] += grad_row[ox];
        }
      }
    }
  }
}

template <typename T>
int rows_per_block(const Conv<T>& conv, int out_h, int out_w) {
  const std::size_t kdim = static_cast<std::size_t>(conv.in_channels) * conv.kernel * conv.kernel;
  const std::size_t rows = kColumnBudget / std::max<std::size_t>(1, kdim * out_w);
  return static_cast<int>(std::clamp<std::size_t>(rows, 1, static_cast<std::size_t>(out_h)));
}

template <typename T>
bool is_pointwise(const Conv<T>& conv) {
  return conv.kernel == 1 && conv.stride == 1 && conv.pad == 0;
}

template <typename T>
Shape output_shape(const Shape& in, const Conv<T>& conv) {
  return {conv.out_channels, conv_extent(in.height, conv.kernel, conv.stride, conv.pad),
          conv_extent(in.width, conv.kernel, conv.stride, conv.pad)};
}

Shape output_shape(const Shape& in, const MaxPool& pool) {
  return {in.channels, conv_extent(in.height, pool.kernel, pool.stride, pool.pad),
          conv_extent(in.width, pool.kernel, pool.stride, pool.pad)};
}

Shape output_shape(const Shape& in, const AvgPool& pool) {
  return {in.channels, conv_extent(in.height, pool.kernel, pool.stride, 0),
          conv_extent(in.width, pool.kernel, pool.stride, 0)};
}

template <typename T>
void check_input_channels(const Node<T>& node, const Shape& in, int expected) {
  if (in.channels != expected)
    fail(ErrorCode::ShapeMismatch, node.name + ": expected " + std::to_string(expected) +
                                       " input channels, got " + std::to_string(in.channels));
}

template <typename T>
Shape node_shape(const Node<T>& node, std::span<const Shape> inputs) {
  return std::visit(
      [&](const auto& op) -> Shape {
        using Op = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<Op, Concat>) {
          Shape out = inputs[0];
          out.channels = 0;
          for (const auto& s : inputs) {
            if (s.height != out.height || s.width != out.width)
              fail(ErrorCode::ShapeMismatch, node.name + ": concatenated inputs differ spatially");
            out.channels += s.channels;
          }
          return out;
        } else if constexpr (std::is_same_v<Op, Conv<T>>) {
          check_input_channels(node, inputs[0], op.in_channels);
          return output_shape(inputs[0], op);
        } else if constexpr (std::is_same_v<Op, BatchNorm<T>>) {
          check_input_channels(node, inputs[0], static_cast<int>(op.scale.size()));
          return inputs[0];
        } else if constexpr (std::is_same_v<Op, Relu>) {
          return inputs[0];
        } else if constexpr (std::is_same_v<Op, Input>) {
          return inputs[0];
        } else {
          return output_shape(inputs[0], op);
        }
      },
      node.op);
}

template <typename T>
Tensor<T> batchnorm_forward(const BatchNorm<T>& bn, const Tensor<T>& x) {
  Tensor<T> y(x.channels(), x.height(), x.width());
  for (int c = 0; c < x.channels(); ++c) {
    const T scale = bn.scale[c];
    const T shift = bn.shift[c];
    auto in = x.channel(c);
    auto out = y.channel(c);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * scale + shift;
  }
  return y;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x, std::vector<std::uint8_t>* mask) {
  Tensor<T> y(x.channels(), x.height(), x.width());
  const T* in = x.data();
  T* out = y.data();
  if (mask) mask->resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on = in[i] > T(0);
    out[i] = on ? in[i] : T(0);
    if (mask) (*mask)[i] = on;
  }
  return y;
}

template <typename T>
Tensor<T> maxpool_forward(const MaxPool& pool, const Tensor<T>& x, std::vector<std::int32_t>* argmax) {
  const Shape out_shape = output_shape({x.channels(), x.height(), x.width()}, pool);
  Tensor<T> y(out_shape.channels, out_shape.height, out_shape.width);
  if (argmax) argmax->resize(y.size());
  const int h = x.height();
  const int w = x.width();
  std::size_t o = 0;
  for (int c = 0; c < x.channels(); ++c) {
    const T* plane = x.data() + c * x.plane();
    for (int oy = 0; oy < out_shape.height; ++oy) {
      for (int ox = 0; ox < out_shape.width; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::int32_t best_index = -1;
        for (int ky = 0; ky < pool.kernel; ++ky) {
          const int iy = oy * pool.stride - pool.pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < pool.kernel; ++kx) {
            const int ix = ox * pool.stride - pool.pad + kx;
            if (ix < 0 || ix >= w) continue;
            const T v = plane[iy * w + ix];
            if (v > best || best_index < 0) {
              best = v;
              best_index = iy * w + ix;
            }
          }
        }
        y.data()[o] = best;
        if (argmax) (*argmax)[o] = best_index;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> avgpool_forward(const AvgPool& pool, const Tensor<T>& x) {
  const Shape out_shape = output_shape({x.channels(), x.height(), x.width()}, pool);
  Tensor<T> y(out_shape.channels, out_shape.height, out_shape.width);
  const T norm = T(1) / static_cast<T>(pool.kernel * pool.kernel);
  for (int c = 0; c < x.channels(); ++c) {
    for (int oy = 0; oy < out_shape.height; ++oy) {
      for (int ox = 0; ox < out_shape.width; ++ox) {
        T acc = 0;
        for (int ky = 0; ky < pool.kernel; ++ky)
          for (int kx = 0; kx < pool.kernel; ++kx)
            acc += x.at(c, oy * pool.stride + ky, ox * pool.stride + kx);
        y.at(c, oy, ox) = acc * norm;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> concat_forward(std::span<const Tensor<T>* const> inputs) {
  int channels = 0;
  for (const auto* in : inputs) channels += in->channels();
  Tensor<T> y(channels, inputs[0]->height(), inputs[0]->width());
  T* out = y.data();
  for (const auto* in : inputs) out = std::copy(in->data(), in->data() + in->size(), out);
  return y;
}

template <typename T>
Tensor<T> evaluate(const Node<T>& node, std::span<const Tensor<T>* const> inputs, int index,
                   Tape* tape) {
  return std::visit(
      [&](const auto& op) -> Tensor<T> {
        using Op = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<Op, Input>) {
          return *inputs[0];
        } else if constexpr (std::is_same_v<Op, Conv<T>>) {
          return conv_forward(op, *inputs[0]);
        } else if constexpr (std::is_same_v<Op, BatchNorm<T>>) {
          return batchnorm_forward(op, *inputs[0]);
        } else if constexpr (std::is_same_v<Op, Relu>) {
          return relu_forward(*inputs[0], tape ? &tape->relu_masks[index] : nullptr);
        } else if constexpr (std::is_same_v<Op, MaxPool>) {
          return maxpool_forward(op, *inputs[0], tape ? &tape->argmax[index] : nullptr);
        } else if constexpr (std::is_same_v<Op, AvgPool>) {
          return avgpool_forward(op, *inputs[0]);
        } else {
          return concat_forward<T>(inputs);
        }
      },
      node.op);
}

template <typename T>
Tensor<T>& ensure(std::vector<Tensor<T>>& grads, const Tape& tape, int index) {
  auto& g = grads[index];
  if (g.empty()) {
    const Shape& s = tape.shapes[index];
    g = Tensor<T>(s.channels, s.height, s.width);
  }
  return g;
}

template <typename T, typename Nodes, typename Hook>
std::vector<Tensor<T>> execute(Nodes& nodes, const Tensor<T>& x, std::span<const int> outputs,
                               Tape* tape, Hook&& hook) {
  if (outputs.empty()) return {};
  const int last = *std::max_element(outputs.begin(), outputs.end());
  if (last < 0 || last >= static_cast<int>(nodes.size()))
    fail(ErrorCode::InvalidArgument, "requested node out of range");

  std::vector<int> remaining(last + 1, 0);
  std::vector<bool> keep(last + 1, false);
  for (int i = 0; i <= last; ++i)
    for (int in : nodes[i].inputs) ++remaining[in];
  for (int o : outputs) keep[o] = true;

  if (tape) {
    tape->shapes.assign(last + 1, {});
    tape->relu_masks.assign(last + 1, {});
    tape->argmax.assign(last + 1, {});
  }

  std::vector<Tensor<T>> values(last + 1);
  std::vector<const Tensor<T>*> args;
  for (int i = 0; i <= last; ++i) {
    auto& node = nodes[i];
    args.clear();
    if (i == 0) {
      args.push_back(&x);
    } else {
      for (int in : node.inputs) args.push_back(&values[in]);
    }
    hook(i, node, std::span<const Tensor<T>* const>(args));
    values[i] = evaluate<T>(node, args, i, tape);
    if (tape) tape->shapes[i] = {values[i].channels(), values[i].height(), values[i].width()};
    for (int in : node.inputs) {
      if (--remaining[in] == 0 && !keep[in]) values[in] = Tensor<T>();
    }
  }

  std::vector<Tensor<T>> result;
  result.reserve(outputs.size());
  for (int o : outputs) result.push_back(values[o]);
  return result;
}

}  // namespace

template <typename T>
void BatchNorm<T>::refold() {
  const std::size_t n = gamma.size();
  scale.resize(n);
  shift.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double s = static_cast<double>(gamma[c]) / std::sqrt(static_cast<double>(running_var[c]) + eps);
    scale[c] = static_cast<T>(s);
    shift[c] = static_cast<T>(static_cast<double>(beta[c]) - static_cast<double>(running_mean[c]) * s);
  }
}

template <typename T>
Tensor<T> conv_forward(const Conv<T>& conv, const Tensor<T>& x) {
  const int out_h = conv_extent(x.height(), conv.kernel, conv.stride, conv.pad);
  const int out_w = conv_extent(x.width(), conv.kernel, conv.stride, conv.pad);
  if (out_h < 1 || out_w < 1) fail(ErrorCode::InputTooSmall, "convolution input too small");
  Tensor<T> y(conv.out_channels, out_h, out_w);
  const int kdim = conv.in_channels * conv.kernel * conv.kernel;
  const int out_plane = out_h * out_w;
  ConstMatMap<T> weight(conv.weight.data(), conv.out_channels, kdim, Eigen::OuterStride<>(kdim));

  if (is_pointwise(conv)) {
    ConstMatMap<T> in(x.data(), conv.in_channels, out_plane, Eigen::OuterStride<>(out_plane));
    MatMap<T> out(y.data(), conv.out_channels, out_plane, Eigen::OuterStride<>(out_plane));
    out.noalias() = weight * in;
  } else {
    const int block = rows_per_block(conv, out_h, out_w);
    std::vector<T> col(static_cast<std::size_t>(kdim) * block * out_w);
    for (int r0 = 0; r0 < out_h; r0 += block) {
      const int r1 = std::min(out_h, r0 + block);
      const int n = (r1 - r0) * out_w;
      im2col(conv, x, r0, r1, out_w, col.data());
      ConstMatMap<T> cols(col.data(), kdim, n, Eigen::OuterStride<>(n));
      MatMap<T> out(y.data() + static_cast<std::size_t>(r0) * out_w, conv.out_channels, n,
                    Eigen::OuterStride<>(out_plane));
      out.noalias() = weight * cols;
    }
  }
  if (!conv.bias.empty()) {
    for (int c = 0; c < conv.out_channels; ++c) {
      for (T& v : y.channel(c)) v += conv.bias[c];
    }
  }
  return y;
}

template <typename T>
void conv_backward(const Conv<T>& conv, const Tensor<T>& dy, Tensor<T>& dx) {
  const int out_h = dy.height();
  const int out_w = dy.width();
  const int kdim = conv.in_channels * conv.kernel * conv.kernel;
  const int out_plane = out_h * out_w;
  ConstMatMap<T> weight(conv.weight.data(), conv.out_channels, kdim, Eigen::OuterStride<>(kdim));

  if (is_pointwise(conv)) {
    ConstMatMap<T> grad(dy.data(), conv.out_channels, out_plane, Eigen::OuterStride<>(out_plane));
    MatMap<T> in(dx.data(), conv.in_channels, out_plane, Eigen::OuterStride<>(out_plane));
    in.noalias() += weight.transpose() * grad;
    return;
  }
  const int block = rows_per_block(conv, out_h, out_w);
  std::vector<T> col(static_cast<std::size_t>(kdim) * block * out_w);
  for (int r0 = 0; r0 < out_h; r0 += block) {
    const int r1 = std::min(out_h, r0 + block);
    const int n = (r1 - r0) * out_w;
    ConstMatMap<T> grad(dy.data() + static_cast<std::size_t>(r0) * out_w, conv.out_channels, n,
                        Eigen::OuterStride<>(out_plane));
    MatMap<T> cols(col.data(), kdim, n, Eigen::OuterStride<>(n));
    cols.noalias() = weight.transpose() * grad;
    col2im_add(conv, col.data(), r0, r1, out_w, dx);
  }
}

template <typename T>
Graph<T>::Graph() {
  nodes_.push_back(Node<T>{"input", Input{}, {}});
}

template <typename T>
int Graph<T>::add(std::string name, Op<T> op, std::vector<int> inputs) {
  if (inputs.empty()) fail(ErrorCode::InvalidArgument, name + ": node needs at least one input");
  for (int in : inputs) {
    if (in < 0 || in >= size()) fail(ErrorCode::InvalidArgument, name + ": input index out of range");
  }
  if (!std::holds_alternative<Concat>(op) && inputs.size() != 1)
    fail(ErrorCode::InvalidArgument, name + ": only concat accepts several inputs");
  if (auto* bn = std::get_if<BatchNorm<T>>(&op)) bn->refold();
  nodes_.push_back(Node<T>{std::move(name), std::move(op), std::move(inputs)});
  return size() - 1;
}

template <typename T>
int Graph<T>::find(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  return -1;
}

template <typename T>
std::vector<Shape> Graph<T>::infer_shapes(const Shape& input) const {
  std::vector<Shape> shapes(nodes_.size());
  shapes[0] = input;
  std::vector<Shape> args;
  for (int i = 1; i < size(); ++i) {
    args.clear();
    for (int in : nodes_[i].inputs) args.push_back(shapes[in]);
    shapes[i] = node_shape(nodes_[i], std::span<const Shape>(args));
    if (shapes[i].height < 1 || shapes[i].width < 1)
      fail(ErrorCode::InputTooSmall, "input " + std::to_string(input.height) + "x" +
                                         std::to_string(input.width) + " collapses at " +
                                         nodes_[i].name);
  }
  return shapes;
}

template <typename T>
std::vector<Tensor<T>> Graph<T>::run(const Tensor<T>& x, std::span<const int> outputs,
                                     Tape* tape) const {
  infer_shapes({x.channels(), x.height(), x.width()});
  return execute<T>(nodes_, x, outputs, tape, [](int, const Node<T>&, auto) {});
}

template <typename T>
void Graph<T>::calibrate(const Tensor<T>& x, int last_node, const CalibrationHook& hook) {
  infer_shapes({x.channels(), x.height(), x.width()});
  const int outputs[] = {last_node};
  execute<T>(nodes_, x, outputs, nullptr, hook);
}

template <typename T>
Tensor<T> Graph<T>::backward(const Tape& tape, std::span<const int> nodes,
                             std::span<const Tensor<T>> grads) const {
  if (nodes.size() != grads.size())
    fail(ErrorCode::InvalidArgument, "backward: node and gradient counts differ");
  if (tape.shapes.empty()) fail(ErrorCode::InvalidArgument, "backward: empty tape");
  const int recorded = static_cast<int>(tape.shapes.size());
  std::vector<Tensor<T>> g(recorded);
  int last = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int n = nodes[i];
    if (n < 0 || n >= recorded) fail(ErrorCode::InvalidArgument, "backward: node not on tape");
    const Shape& s = tape.shapes[n];
    if (grads[i].channels() != s.channels || grads[i].height() != s.height ||
        grads[i].width() != s.width)
      fail(ErrorCode::ShapeMismatch, "backward: gradient shape differs for " + nodes_[n].name);
    auto& dst = ensure(g, tape, n);
    for (std::size_t k = 0; k < dst.size(); ++k) dst.data()[k] += grads[i].data()[k];
    last = std::max(last, n);
  }

  for (int n = last; n >= 1; --n) {
    if (g[n].empty()) continue;
    const Tensor<T> dy = std::move(g[n]);
    g[n] = Tensor<T>();
    const auto& node = nodes_[n];
    std::visit(
        [&](const auto& op) {
          using Op = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<Op, Conv<T>>) {
            conv_backward(op, dy, ensure(g, tape, node.inputs[0]));
          } else if constexpr (std::is_same_v<Op, BatchNorm<T>>) {
            auto& dx = ensure(g, tape, node.inputs[0]);
            for (int c = 0; c < dy.channels(); ++c) {
              const T scale = op.scale[c];
              auto src = dy.channel(c);
              auto dst = dx.channel(c);
              for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i] * scale;
            }
          } else if constexpr (std::is_same_v<Op, Relu>) {
            auto& dx = ensure(g, tape, node.inputs[0]);
            const auto& mask = tape.relu_masks[n];
            for (std::size_t i = 0; i < dy.size(); ++i) {
              if (mask[i]) dx.data()[i] += dy.data()[i];
            }
          } else if constexpr (std::is_same_v<Op, MaxPool>) {
            auto& dx = ensure(g, tape, node.inputs[0]);
            const auto& argmax = tape.argmax[n];
            const std::size_t out_plane = dy.plane();
            for (int c = 0; c < dy.channels(); ++c) {
              T* plane = dx.data() + c * dx.plane();
              for (std::size_t i = 0; i < out_plane; ++i) {
                const std::size_t o = c * out_plane + i;
                plane[argmax[o]] += dy.data()[o];
              }
            }
          } else if constexpr (std::is_same_v<Op, AvgPool>) {
            auto& dx = ensure(g, tape, node.inputs[0]);
            const T norm = T(1) / static_cast<T>(op.kernel * op.kernel);
            for (int c = 0; c < dy.channels(); ++c)
              for (int oy = 0; oy < dy.height(); ++oy)
                for (int ox = 0; ox < dy.width(); ++ox) {
                  const T v = dy.at(c, oy, ox) * norm;
                  for (int ky = 0; ky < op.kernel; ++ky)
                    for (int kx = 0; kx < op.kernel; ++kx)
                      dx.at(c, oy * op.stride + ky, ox * op.stride + kx) += v;
                }
          } else if constexpr (std::is_same_v<Op, Concat>) {
            const T* src = dy.data();
            for (int in : node.inputs) {
              auto& dx = ensure(g, tape, in);
              for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += src[i];
              src += dx.size();
            }
          }
        },
        node.op);
  }
  if (g[0].empty()) ensure(g, tape, 0);
  return std::move(g[0]);
}

namespace {

template <typename U, typename T>
std::vector<U> convert(const std::vector<T>& v) {
  return std::vector<U>(v.begin(), v.end());
}

template <typename U, typename T>
Op<U> cast_op(const Op<T>& op) {
  return std::visit(
      [](const auto& o) -> Op<U> {
        using O = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<O, Conv<T>>) {
          return Conv<U>{o.in_channels, o.out_channels, o.kernel, o.stride,
                         o.pad,         convert<U>(o.weight), convert<U>(o.bias)};
        } else if constexpr (std::is_same_v<O, BatchNorm<T>>) {
          BatchNorm<U> bn{convert<U>(o.gamma), convert<U>(o.beta), convert<U>(o.running_mean),
                          convert<U>(o.running_var), o.eps, {}, {}};
          return bn;
        } else {
          return o;
        }
      },
      op);
}

}  // namespace

template <typename T>
template <typename U>
Graph<U> Graph<T>::cast() const {
  Graph<U> out;
  for (int i = 1; i < size(); ++i)
    out.add(nodes_[i].name, cast_op<U, T>(nodes_[i].op), nodes_[i].inputs);
  return out;
}

template struct BatchNorm<float>;
template struct BatchNorm<double>;
template class Graph<float>;
template class Graph<double>;
template Graph<double> Graph<float>::cast<double>() const;
template Graph<float> Graph<double>::cast<float>() const;
template Graph<float> Graph<float>::cast<float>() const;
template Graph<double> Graph<double>::cast<double>() const;
template Tensor<float> conv_forward(const Conv<float>&, const Tensor<float>&);
template Tensor<double> conv_forward(const Conv<double>&, const Tensor<double>&);
template void conv_backward(const Conv<float>&, const Tensor<float>&, Tensor<float>&);
template void conv_backward(const Conv<double>&, const Tensor<double>&, Tensor<double>&);

}  // namespace senti::nn
