#include "ksgan/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>

#include "ksgan/error.hpp"

namespace ksgan::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Node = Graph::Node;

Graph& graph_of(const Var& a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.graph();
}

Graph& graph_of(const Var& a, const Var& b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw ContractError("operands live on different graphs");
  return g;
}

template <class F>
Tensor map_unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

// Per-output-axis stride into the (right-aligned) input; 0 on broadcast axes.
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  const std::size_t offset = out.size() - in.size();
  std::size_t stride = 1;
  for (std::size_t k = in.size(); k-- > 0;) {
    strides[offset + k] = in[k] == 1 ? 0 : stride;
    stride *= in[k];
  }
  return strides;
}

void check_broadcastable(const Shape& in, const Shape& out) {
  bool ok = in.size() <= out.size();
  for (std::size_t k = 0; ok && k < in.size(); ++k) {
    const std::size_t d = in[in.size() - 1 - k];
    ok = d == 1 || d == out[out.size() - 1 - k];
  }
  if (!ok) throw ContractError("cannot broadcast " + shape_str(in) + " to " + shape_str(out));
}

// Calls f(out_index, in_index) for every element of the broadcast result.
template <class F>
void for_each_broadcast(const Shape& in, const Shape& out, F f) {
  const std::size_t n = shape_size(out);
  const std::size_t in_n = shape_size(in);
  if (in_n == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i, 0);
    return;
  }
  // Trailing block equal to the input: index modulo the input size.
  std::size_t lead = 0;
  while (lead < in.size() && in[lead] == 1) ++lead;
  if (std::equal(in.begin() + lead, in.end(), out.end() - (in.size() - lead))) {
    for (std::size_t i = 0; i < n; ++i) f(i, i % in_n);
    return;
  }
  const auto strides = broadcast_strides(in, out);
  std::vector<std::size_t> counter(out.size(), 0);
  std::size_t in_idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, in_idx);
    for (std::size_t k = out.size(); k-- > 0;) {
      ++counter[k];
      in_idx += strides[k];
      if (counter[k] < out[k]) break;
      in_idx -= strides[k] * counter[k];
      counter[k] = 0;
    }
  }
}

Tensor broadcast_kernel(const Tensor& x, const Shape& shape) {
  Tensor out(shape);
  auto src = x.data();
  auto dst = out.data();
  for_each_broadcast(x.shape(), shape, [&](std::size_t o, std::size_t i) { dst[o] = src[i]; });
  return out;
}

Tensor sum_to_kernel(const Tensor& x, const Shape& shape) {
  Tensor out(shape);
  auto src = x.data();
  auto dst = out.data();
  for_each_broadcast(shape, x.shape(), [&](std::size_t o, std::size_t i) { dst[i] += src[o]; });
  return out;
}

Tensor matmul_kernel(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ContractError("matmul: expected 2-D operands, got " + shape_str(a.shape()) + " and " +
                        shape_str(b.shape()));
  }
  const std::size_t m = ta ? a.dim(1) : a.dim(0);
  const std::size_t ka = ta ? a.dim(0) : a.dim(1);
  const std::size_t kb = tb ? b.dim(1) : b.dim(0);
  const std::size_t n = tb ? b.dim(0) : b.dim(1);
  if (ka != kb) {
    throw ContractError("matmul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out({m, n});
  Eigen::Map<const RowMat> A(a.data().data(), a.dim(0), a.dim(1));
  Eigen::Map<const RowMat> B(b.data().data(), b.dim(0), b.dim(1));
  Eigen::Map<RowMat> C(out.data().data(), m, n);
  if (!ta && !tb) {
    C.noalias() = A * B;
  } else if (!ta && tb) {
    C.noalias() = A * B.transpose();
  } else if (ta && !tb) {
    C.noalias() = A.transpose() * B;
  } else {
    C.noalias() = A.transpose() * B.transpose();
  }
  return out;
}

Var make(Graph& g, Op op, std::vector<NodeId> inputs, Tensor value) {
  Node node;
  node.op = op;
  node.inputs = std::move(inputs);
  node.value = std::move(value);
  return g.record(std::move(node));
}

std::pair<Var, Var> broadcast_pair(const Var& a, const Var& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  return {a.shape() == out ? a : broadcast_to(a, out), b.shape() == out ? b : broadcast_to(b, out)};
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::SumAll: return "sum";
    case Op::SumAxis: return "sum_axis";
    case Op::Abs: return "abs";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Relu: return "relu";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::Square: return "square";
    case Op::L2NormSq: return "l2_norm_sq";
    case Op::BroadcastTo: return "broadcast_to";
    case Op::SumTo: return "sum_to";
    case Op::Reshape: return "reshape";
    case Op::Concat: return "concat";
    case Op::SliceRows: return "slice_rows";
    case Op::MaxAll: return "max";
    case Op::IndicatorSte: return "indicator_ste";
  }
  return "?";
}

const Tensor& Var::value() const { return graph_->node(id_).value; }

bool Var::requires_grad() const { return graph_->node(id_).requires_grad; }

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Graph::record(Node node) {
  bool rg = false;
  if (grad_enabled_) {
    for (NodeId in : node.inputs) rg = rg || nodes_[in].requires_grad;
  }
  node.requires_grad = rg;
  if (!rg) node.inputs.clear();
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}


Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ContractError("shape mismatch: " + shape_str(a) + " and " + shape_str(b) +
                          " are not broadcastable");
    }
    out[r - 1 - k] = da == 1 ? db : da;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward primitives

Var add(const Var& a, const Var& b) {
  Graph& g = graph_of(a, b);
  auto [x, y] = broadcast_pair(a, b);
  return make(g, Op::Add, {x.id(), y.id()}, map_binary(x.value(), y.value(), std::plus<>()));
}

Var sub(const Var& a, const Var& b) {
  Graph& g = graph_of(a, b);
  auto [x, y] = broadcast_pair(a, b);
  return make(g, Op::Sub, {x.id(), y.id()}, map_binary(x.value(), y.value(), std::minus<>()));
}

Var mul(const Var& a, const Var& b) {
  Graph& g = graph_of(a, b);
  auto [x, y] = broadcast_pair(a, b);
  return make(g, Op::Mul, {x.id(), y.id()}, map_binary(x.value(), y.value(), std::multiplies<>()));
}

Var div(const Var& a, const Var& b) {
  Graph& g = graph_of(a, b);
  auto [x, y] = broadcast_pair(a, b);
  return make(g, Op::Div, {x.id(), y.id()}, map_binary(x.value(), y.value(), std::divides<>()));
}

Var neg(const Var& x) {
  return make(graph_of(x), Op::Neg, {x.id()}, map_unary(x.value(), [](double v) { return -v; }));
}

Var scale(const Var& x, double factor) {
  Node node;
  node.op = Op::Scale;
  node.inputs = {x.id()};
  node.value = map_unary(x.value(), [factor](double v) { return v * factor; });
  node.scalar = factor;
  return graph_of(x).record(std::move(node));
}

Var add_scalar(const Var& x, double value) {
  Graph& g = graph_of(x);
  return add(x, g.constant(Tensor::scalar(value)));
}

Var matmul(const Var& a, const Var& b, bool transpose_a, bool transpose_b) {
  Graph& g = graph_of(a, b);
  Node node;
  node.op = Op::MatMul;
  node.inputs = {a.id(), b.id()};
  node.value = matmul_kernel(a.value(), b.value(), transpose_a, transpose_b);
  node.a0 = transpose_a;
  node.a1 = transpose_b;
  return g.record(std::move(node));
}

Var transpose(const Var& x) {
  const Tensor& v = x.value();
  if (v.rank() != 2) throw ContractError("transpose: expected 2-D, got " + shape_str(v.shape()));
  Tensor out({v.dim(1), v.dim(0)});
  for (std::size_t r = 0; r < v.dim(0); ++r)
    for (std::size_t c = 0; c < v.dim(1); ++c) out.at(c, r) = v.at(r, c);
  return make(graph_of(x), Op::Transpose, {x.id()}, std::move(out));
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return make(graph_of(x), Op::SumAll, {x.id()}, Tensor::scalar(s));
}

Var sum(const Var& x, std::size_t axis, bool keepdim) {
  const Tensor& v = x.value();
  if (axis >= v.rank()) {
    throw ContractError("sum: axis " + std::to_string(axis) + " out of range for " + shape_str(v.shape()));
  }
  const Shape& s = v.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= s[k];
  for (std::size_t k = axis + 1; k < s.size(); ++k) inner *= s[k];
  const std::size_t n = s[axis];
  Shape out_shape = s;
  if (keepdim) {
    out_shape[axis] = 1;
  } else {
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  Tensor out(out_shape);
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < inner; ++i) dst[o * inner + i] += src[(o * n + j) * inner + i];
  Node node;
  node.op = Op::SumAxis;
  node.inputs = {x.id()};
  node.value = std::move(out);
  node.a0 = axis;
  node.a1 = keepdim;
  return graph_of(x).record(std::move(node));
}

Var mean(const Var& x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var mean(const Var& x, std::size_t axis, bool keepdim) {
  const Var s = sum(x, axis, keepdim);
  const std::size_t n = x.shape()[axis];
  if (n == 0) throw ContractError("mean over an empty axis");
  return scale(s, 1.0 / static_cast<double>(n));
}

Var max(const Var& x) {
  const Tensor& v = x.value();
  if (v.size() == 0) throw ContractError("max of an empty tensor");
  auto d = v.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] > d[best]) best = i;
  Node node;
  node.op = Op::MaxAll;
  node.inputs = {x.id()};
  node.value = Tensor::scalar(d[best]);
  node.aux = Tensor(v.shape());
  node.aux[best] = 1.0;
  return graph_of(x).record(std::move(node));
}

Var abs(const Var& x) {
  return make(graph_of(x), Op::Abs, {x.id()}, map_unary(x.value(), [](double v) { return std::fabs(v); }));
}

Var exp(const Var& x) {
  return make(graph_of(x), Op::Exp, {x.id()}, map_unary(x.value(), [](double v) { return std::exp(v); }));
}

Var log(const Var& x) {
  return make(graph_of(x), Op::Log, {x.id()}, map_unary(x.value(), [](double v) { return std::log(v); }));
}

Var sqrt(const Var& x) {
  return make(graph_of(x), Op::Sqrt, {x.id()}, map_unary(x.value(), [](double v) { return std::sqrt(v); }));
}

Var relu(const Var& x) {
  return make(graph_of(x), Op::Relu, {x.id()},
              map_unary(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}

Var leaky_relu(const Var& x, double slope) {
  Node node;
  node.op = Op::LeakyRelu;
  node.inputs = {x.id()};
  node.value = map_unary(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; });
  node.scalar = slope;
  return graph_of(x).record(std::move(node));
}

namespace {
double sigmoid_value(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}
}  // namespace

Var sigmoid(const Var& x) {
  return make(graph_of(x), Op::Sigmoid, {x.id()}, map_unary(x.value(), sigmoid_value));
}

Var softplus(const Var& x) {
  return make(graph_of(x), Op::Softplus, {x.id()}, map_unary(x.value(), [](double v) {
                return std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
              }));
}

Var square(const Var& x) {
  return make(graph_of(x), Op::Square, {x.id()}, map_unary(x.value(), [](double v) { return v * v; }));
}

Var l2_norm_sq(const Var& x) {
  const Tensor& v = x.value();
  if (v.rank() == 0) throw ContractError("l2_norm_sq of a rank-0 tensor");
  const std::size_t d = v.shape().back();
  Shape out_shape(v.shape().begin(), v.shape().end() - 1);
  Tensor out(out_shape);
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += src[r * d + k] * src[r * d + k];
    dst[r] = s;
  }
  return make(graph_of(x), Op::L2NormSq, {x.id()}, std::move(out));
}

Var broadcast_to(const Var& x, const Shape& shape) {
  check_broadcastable(x.shape(), shape);
  return make(graph_of(x), Op::BroadcastTo, {x.id()}, broadcast_kernel(x.value(), shape));
}

Var sum_to(const Var& x, const Shape& shape) {
  check_broadcastable(shape, x.shape());
  if (x.shape() == shape) return x;
  return make(graph_of(x), Op::SumTo, {x.id()}, sum_to_kernel(x.value(), shape));
}

Var reshape(const Var& x, const Shape& shape) {
  return make(graph_of(x), Op::Reshape, {x.id()}, x.value().reshaped(shape));
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Graph& g = graph_of(parts[0]);
  std::vector<Tensor> values;
  std::vector<NodeId> ids;
  for (const auto& p : parts) {
    if (p.graph() != &g) throw ContractError("operands live on different graphs");
    values.push_back(p.value());
    ids.push_back(p.id());
  }
  return make(g, Op::Concat, std::move(ids), concat_rows(values));
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  Node node;
  node.op = Op::SliceRows;
  node.inputs = {x.id()};
  node.value = x.value().rows(begin, end);
  node.a0 = begin;
  node.a1 = end;
  return graph_of(x).record(std::move(node));
}

Var detach(const Var& x) { return graph_of(x).constant(x.value()); }

Var indicator_ste(const Var& c, const Var& lambda, double clip_radius) {
  Graph& g = graph_of(c, lambda);
  const Shape out_shape = broadcast_shape(c.shape(), lambda.shape());
  const Tensor cv = broadcast_kernel(c.value(), out_shape);
  const Tensor lv = broadcast_kernel(lambda.value(), out_shape);
  Node node;
  node.op = Op::IndicatorSte;
  node.inputs = {c.id(), lambda.id()};
  node.value = map_binary(cv, lv, [](double a, double b) { return a <= b ? 1.0 : 0.0; });
  node.scalar = clip_radius;
  if (clip_radius > 0.0) {
    node.aux = map_binary(cv, lv, [clip_radius](double a, double b) {
      return std::fabs(a - b) <= clip_radius ? 1.0 : 0.0;
    });
  }
  return g.record(std::move(node));
}

// ---------------------------------------------------------------------------
// Backward rules

namespace {

// Fills `out[k]` with the gradient for input k (left empty when not needed).
void backward_rule(Graph& g, NodeId id, const Var& gy, const std::vector<bool>& need,
                   std::vector<std::optional<Var>>& out) {
  const Op op = g.node(id).op;
  const std::vector<NodeId> in = g.node(id).inputs;
  const double scalar = g.node(id).scalar;
  const std::size_t a0 = g.node(id).a0;
  const std::size_t a1 = g.node(id).a1;
  const Var y = g.var(id);
  auto input = [&](std::size_t k) { return g.var(in[k]); };
  auto wants = [&](std::size_t k) { return need[in[k]]; };
  out.assign(in.size(), std::nullopt);

  switch (op) {
    case Op::Leaf:
      break;
    case Op::Add:
      if (wants(0)) out[0] = gy;
      if (wants(1)) out[1] = gy;
      break;
    case Op::Sub:
      if (wants(0)) out[0] = gy;
      if (wants(1)) out[1] = neg(gy);
      break;
    case Op::Mul:
      if (wants(0)) out[0] = mul(gy, input(1));
      if (wants(1)) out[1] = mul(gy, input(0));
      break;
    case Op::Div:
      if (wants(0)) out[0] = div(gy, input(1));
      if (wants(1)) out[1] = neg(div(mul(gy, y), input(1)));
      break;
    case Op::Neg:
      out[0] = neg(gy);
      break;
    case Op::Scale:
      out[0] = scale(gy, scalar);
      break;
    case Op::MatMul: {
      const bool ta = a0 != 0, tb = a1 != 0;
      const Var a = input(0), b = input(1);
      if (wants(0)) {
        if (!ta) out[0] = tb ? matmul(gy, b) : matmul(gy, b, false, true);
        else out[0] = tb ? matmul(b, gy, true, true) : matmul(b, gy, false, true);
      }
      if (wants(1)) {
        if (!tb) out[1] = ta ? matmul(a, gy) : matmul(a, gy, true, false);
        else out[1] = ta ? matmul(gy, a, true, true) : matmul(gy, a, true, false);
      }
      break;
    }
    case Op::Transpose:
      out[0] = transpose(gy);
      break;
    case Op::SumAll:
      out[0] = broadcast_to(gy, input(0).shape());
      break;
    case Op::SumAxis: {
      const Shape in_shape = input(0).shape();
      Var g2 = gy;
      if (!a1) {
        Shape kept = in_shape;
        kept[a0] = 1;
        g2 = reshape(gy, kept);
      }
      out[0] = broadcast_to(g2, in_shape);
      break;
    }
    case Op::MaxAll:
      out[0] = mul(broadcast_to(gy, input(0).shape()), g.constant(g.node(id).aux));
      break;
    case Op::Abs:
      out[0] = mul(gy, g.constant(map_unary(input(0).value(), [](double v) {
                     return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                   })));
      break;
    case Op::Exp:
      out[0] = mul(gy, y);
      break;
    case Op::Log:
      out[0] = div(gy, input(0));
      break;
    case Op::Sqrt:
      out[0] = div(scale(gy, 0.5), y);
      break;
    case Op::Relu:
      out[0] = mul(gy, g.constant(map_unary(input(0).value(), [](double v) { return v > 0.0 ? 1.0 : 0.0; })));
      break;
    case Op::LeakyRelu:
      out[0] = mul(gy, g.constant(map_unary(input(0).value(),
                                            [scalar](double v) { return v > 0.0 ? 1.0 : scalar; })));
      break;
    case Op::Sigmoid:
      out[0] = mul(gy, mul(y, add_scalar(neg(y), 1.0)));
      break;
    case Op::Softplus:
      out[0] = mul(gy, sigmoid(input(0)));
      break;
    case Op::Square:
      out[0] = mul(gy, scale(input(0), 2.0));
      break;
    case Op::L2NormSq: {
      Shape kept = input(0).shape();
      kept.back() = 1;
      out[0] = mul(reshape(gy, kept), scale(input(0), 2.0));
      break;
    }
    case Op::BroadcastTo:
      out[0] = sum_to(gy, input(0).shape());
      break;
    case Op::SumTo:
      out[0] = broadcast_to(gy, input(0).shape());
      break;
    case Op::Reshape:
      out[0] = reshape(gy, input(0).shape());
      break;
    case Op::Concat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t rows = input(k).shape()[0];
        if (wants(k)) out[k] = slice_rows(gy, offset, offset + rows);
        offset += rows;
      }
      break;
    }
    case Op::SliceRows: {
      const Shape in_shape = input(0).shape();
      std::vector<Var> parts;
      if (a0 > 0) {
        Shape s = in_shape;
        s[0] = a0;
        parts.push_back(g.constant(Tensor(s)));
      }
      parts.push_back(gy);
      if (a1 < in_shape[0]) {
        Shape s = in_shape;
        s[0] = in_shape[0] - a1;
        parts.push_back(g.constant(Tensor(s)));
      }
      out[0] = parts.size() == 1 ? gy : concat(parts);
      break;
    }
    case Op::IndicatorSte: {
      Var surrogate = gy;
      if (scalar > 0.0) surrogate = mul(gy, g.constant(g.node(id).aux));
      if (wants(0)) out[0] = sum_to(neg(surrogate), input(0).shape());
      if (wants(1)) out[1] = sum_to(surrogate, input(1).shape());
      break;
    }
  }
}

}  // namespace

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph) {
  Graph& g = graph_of(output);
  if (output.value().size() != 1) {
    throw ContractError("grad: output must be scalar, got shape " + shape_str(output.shape()));
  }
  const NodeId out_id = output.id();
  NodeId lowest = out_id;
  std::vector<bool> need(out_id + 1, false);
  for (const auto& in : inputs) {
    if (in.graph() != &g) throw ContractError("grad: input lives on a different graph");
    if (in.id() <= out_id && in.requires_grad()) {
      need[in.id()] = true;
      lowest = std::min(lowest, in.id());
    }
  }
  // Forward sweep: a node is needed when it requires grad and depends on an input.
  for (NodeId id = lowest; id <= out_id; ++id) {
    const auto& node = g.node(id);
    if (need[id] || !node.requires_grad) continue;
    for (NodeId p : node.inputs) {
      if (need[p]) {
        need[id] = true;
        break;
      }
    }
  }

  std::optional<NoGradGuard> guard;
  if (!create_graph) guard.emplace(g);

  std::vector<std::optional<Var>> grads(out_id + 1);
  if (need[out_id]) grads[out_id] = g.constant(Tensor(output.shape(), 1.0));

  std::vector<std::optional<Var>> local;
  for (NodeId id = out_id + 1; id-- > lowest;) {
    if (!grads[id] || !need[id] || g.node(id).op == Op::Leaf) continue;
    backward_rule(g, id, *grads[id], need, local);
    const std::vector<NodeId> in = g.node(id).inputs;
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (!local[k]) continue;
      auto& slot = grads[in[k]];
      slot = slot ? add(*slot, *local[k]) : *local[k];
    }
  }

  std::vector<Var> result;
  result.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.id() <= out_id && grads[in.id()]) {
      result.push_back(*grads[in.id()]);
    } else {
      result.push_back(g.constant(Tensor(in.shape())));
    }
  }
  return result;
}

std::vector<Tensor> grad_values(const Var& output, const std::vector<Var>& inputs) {
  std::vector<Tensor> out;
  for (const auto& v : grad(output, inputs, false)) out.push_back(v.value());
  return out;
}

}  // namespace ksgan::ad
