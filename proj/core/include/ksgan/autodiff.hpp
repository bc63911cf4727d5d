#pragma once

// Tape-based reverse-mode automatic differentiation over dense tensors.
//
// Every primitive appends one node to a Graph. Backward rules are themselves
// written in terms of primitives, so grad(..., create_graph=true) returns
// gradients that live on the same graph and can be differentiated again.

#include <cstdint>
#include <deque>
#include <vector>

#include "ksgan/tensor.hpp"

namespace ksgan::ad {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,
  MatMul,
  Transpose,
  SumAll,
  SumAxis,
  Abs,
  Exp,
  Log,
  Sqrt,
  Relu,
  LeakyRelu,
  Sigmoid,
  Softplus,
  Square,
  L2NormSq,
  BroadcastTo,
  SumTo,
  Reshape,
  Concat,
  SliceRows,
  MaxAll,
  IndicatorSte,
};

const char* op_name(Op op);

class Graph;

/// Handle to one node of a Graph. Cheap to copy; only valid while its graph
/// is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  NodeId id() const { return id_; }
  Graph* graph() const { return graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

class Graph {
 public:
  struct Node {
    Op op = Op::Leaf;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor aux;            // op-specific constant (argmax one-hot, clip mask)
    double scalar = 0.0;   // Scale factor, leaky slope, clip radius
    std::size_t a0 = 0;    // axis / slice begin / transpose-a flag
    std::size_t a1 = 0;    // keepdim / slice end / transpose-b flag
    bool requires_grad = false;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Handle for an existing node.
  Var var(NodeId id) { return Var(this, id); }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_[id]; }
  bool grad_enabled() const { return grad_enabled_; }

  /// Appends a node. requires_grad is derived from the inputs and the
  /// current grad mode.
  Var record(Node node);

 private:
  friend class NoGradGuard;
  std::deque<Node> nodes_;  // stable references while recording
  bool grad_enabled_ = true;
};

/// While alive, new nodes on the graph are recorded without backward edges.
class NoGradGuard {
 public:
  explicit NoGradGuard(Graph& graph) : graph_(graph), previous_(graph.grad_enabled_) {
    graph_.grad_enabled_ = false;
  }
  ~NoGradGuard() { graph_.grad_enabled_ = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Graph& graph_;
  bool previous_;
};

/// Result shape of numpy-style broadcasting; throws ContractError naming both
/// shapes when they do not conform.
Shape broadcast_shape(const Shape& a, const Shape& b);

// Elementwise binary ops broadcast their operands.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& x);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double value);

/// 2-D product op(a) * op(b) where op transposes when the flag is set.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);
Var transpose(const Var& x);

Var sum(const Var& x);
Var sum(const Var& x, std::size_t axis, bool keepdim = false);
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis, bool keepdim = false);
/// Largest entry; the gradient goes to the first maximal position.
Var max(const Var& x);

Var abs(const Var& x);  // subgradient 0 at 0
Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
Var softplus(const Var& x);
Var square(const Var& x);
/// Squared Euclidean norm over the last axis.
Var l2_norm_sq(const Var& x);

Var broadcast_to(const Var& x, const Shape& shape);
/// Sums x down to `shape`; the adjoint of broadcast_to.
Var sum_to(const Var& x, const Shape& shape);
Var reshape(const Var& x, const Shape& shape);
/// Concatenation along axis 0.
Var concat(const std::vector<Var>& parts);
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
/// Same value, no backward edge.
Var detach(const Var& x);

/// Hard indicator 1[c <= lambda] with a straight-through backward pass that
/// treats the op as the linear map (lambda - c): dc = -g, dlambda = +g.
/// With clip_radius > 0 the surrogate is zeroed where |c - lambda| > clip_radius.
Var indicator_ste(const Var& c, const Var& lambda, double clip_radius = 0.0);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(double s, const Var& x) { return scale(x, s); }
inline Var operator*(const Var& x, double s) { return scale(x, s); }

/// d(output)/d(input) for each input. output must hold a single value.
/// Inputs the output does not depend on get a zero gradient of their shape.
/// With create_graph the returned Vars carry backward edges so they can be
/// differentiated again; otherwise they are recorded as constants.
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph = false);

/// Convenience wrapper returning plain tensors.
std::vector<Tensor> grad_values(const Var& output, const std::vector<Var>& inputs);

}  // namespace ksgan::ad
