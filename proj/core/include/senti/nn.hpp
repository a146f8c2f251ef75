#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "senti/tensor.hpp"

// Minimal inference graph for frozen convolutional backbones. Weights are
// constants; backward() propagates gradients to the graph input only.
namespace senti::nn {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct Input {};

template <typename T>
struct Conv {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  std::vector<T> weight;  // [out][in][k][k]
  std::vector<T> bias;    // empty when the layer has no bias
};

/// Batch normalization in evaluation mode. scale/shift are the folded form
/// used at run time; call refold() after editing the statistics.
template <typename T>
struct BatchNorm {
  std::vector<T> gamma, beta, running_mean, running_var;
  double eps = 1e-5;
  std::vector<T> scale, shift;

  void refold();
};

struct Relu {};

struct MaxPool {
  int kernel = 2;
  int stride = 2;
  int pad = 0;
};

struct AvgPool {
  int kernel = 2;
  int stride = 2;
};

struct Concat {};

template <typename T>
using Op = std::variant<Input, Conv<T>, BatchNorm<T>, Relu, MaxPool, AvgPool, Concat>;

template <typename T>
struct Node {
  std::string name;
  Op<T> op;
  std::vector<int> inputs;
};

/// What backward() needs from a forward pass: output shapes, ReLU masks and
/// max-pool argmax indices. Activations themselves are not retained.
struct Tape {
  std::vector<Shape> shapes;
  std::vector<std::vector<std::uint8_t>> relu_masks;
  std::vector<std::vector<std::int32_t>> argmax;
};

template <typename T>
Tensor<T> conv_forward(const Conv<T>& conv, const Tensor<T>& x);
/// Accumulates the input gradient of `conv` into dx.
template <typename T>
void conv_backward(const Conv<T>& conv, const Tensor<T>& dy, Tensor<T>& dx);

template <typename T>
class Graph {
 public:
  /// Called before node `index` executes, with its inputs. May modify the
  /// node's parameters (used for data-dependent weight calibration).
  using CalibrationHook =
      std::function<void(int index, Node<T>& node, std::span<const Tensor<T>* const> inputs)>;

  Graph();

  int add(std::string name, Op<T> op, std::vector<int> inputs);

  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  const Node<T>& node(int index) const { return nodes_.at(index); }
  Node<T>& node(int index) { return nodes_.at(index); }
  /// -1 when absent.
  int find(std::string_view name) const;

  /// Output shapes for an input of the given shape. Throws InputTooSmall if
  /// any node would have an empty spatial extent.
  std::vector<Shape> infer_shapes(const Shape& input) const;

  /// Evaluates the graph up to the largest requested node and returns the
  /// requested outputs in order. Fills `tape` when given.
  std::vector<Tensor<T>> run(const Tensor<T>& x, std::span<const int> outputs,
                             Tape* tape = nullptr) const;

  /// Single forward pass that invokes `hook` before each node.
  void calibrate(const Tensor<T>& x, int last_node, const CalibrationHook& hook);

  /// Gradient with respect to the graph input given upstream gradients for
  /// a set of nodes evaluated in the pass recorded by `tape`.
  Tensor<T> backward(const Tape& tape, std::span<const int> nodes,
                     std::span<const Tensor<T>> grads) const;

  /// Converts every parameter to another precision.
  template <typename U>
  Graph<U> cast() const;

 private:
  std::vector<Node<T>> nodes_;
};

}  // namespace senti::nn
