#pragma once

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "genrank/numeric/tensor.hpp"

namespace genrank {

template <typename Scalar>
class Graph;

// Handle to a node in a Graph. Cheap to copy.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, int id) : graph_(graph), id_(id) {}

  Graph<Scalar>& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor<Scalar>& value() const { return graph_->value(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Scalar item() const;

 private:
  Graph<Scalar>* graph_ = nullptr;
  int id_ = -1;
};

// Tape for reverse-mode differentiation. Nodes are appended in creation order,
// which is a topological order, so backward is a single reverse sweep.
template <typename Scalar>
class Graph {
 public:
  using Mat = Tensor<Scalar>;
  using BackwardFn = std::function<void(Graph&, const Mat& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<Scalar> constant(Mat value) {
    return push("constant", std::move(value), false, nullptr);
  }

  Var<Scalar> parameter(Mat value) {
    return push("parameter", std::move(value), true, nullptr);
  }

  // Leaves that alias caller-owned storage; `value` must outlive the graph and
  // stay unmodified while it is in use.
  Var<Scalar> constant_view(const Mat& value) { return push_view("constant", value, false); }
  Var<Scalar> parameter_view(const Mat& value) { return push_view("parameter", value, true); }

  // Adds an op node. `fn` is dropped when no input needs a gradient.
  Var<Scalar> record(const char* op, Mat value, std::initializer_list<Var<Scalar>> inputs,
                     BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      if (&in.graph() != this) throw UsageError(std::string(op) + ": inputs from another graph");
      needs = needs || nodes_[in.id()].requires_grad;
    }
    return push(op, std::move(value), needs, needs ? std::move(fn) : nullptr);
  }

  Var<Scalar> record(const char* op, Mat value, const std::vector<Var<Scalar>>& inputs,
                     BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      if (&in.graph() != this) throw UsageError(std::string(op) + ": inputs from another graph");
      needs = needs || nodes_[in.id()].requires_grad;
    }
    return push(op, std::move(value), needs, needs ? std::move(fn) : nullptr);
  }

  const Mat& value(int id) const {
    const auto& node = nodes_.at(static_cast<std::size_t>(id));
    return node.view != nullptr ? *node.view : node.value;
  }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient storage for node `id`, zero-initialised on first touch.
  Mat& grad_ref(int id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.grad.size() == 0) {
      const Mat& v = node.view != nullptr ? *node.view : node.value;
      node.grad = Mat::Zero(v.rows(), v.cols());
    }
    return node.grad;
  }

  // d(loss)/d(node); zeros if the node does not influence the loss.
  Mat grad(const Var<Scalar>& v) const {
    const auto& node = nodes_.at(static_cast<std::size_t>(v.id()));
    if (node.grad.size() == 0) return Mat::Zero(v.rows(), v.cols());
    return node.grad;
  }

  void backward(const Var<Scalar>& loss, Scalar seed = Scalar(1)) {
    if (&loss.graph() != this) throw UsageError("backward: loss belongs to another graph");
    const auto& v = loss.value();
    if (v.rows() != 1 || v.cols() != 1) {
      throw UsageError("backward: loss must be scalar, got " + shape_string(v));
    }
    if (backward_done_) throw UsageError("backward: graph already differentiated");
    backward_done_ = true;
    if (!nodes_[static_cast<std::size_t>(loss.id())].requires_grad) return;
    grad_ref(loss.id())(0, 0) += seed;
    for (int id = loss.id(); id >= 0; --id) {
      auto& node = nodes_[static_cast<std::size_t>(id)];
      if (!node.backward || node.grad.size() == 0) continue;
      node.backward(*this, node.grad);
    }
  }

 private:
  struct Node {
    const char* op;
    Mat value;
    Mat grad;
    bool requires_grad;
    BackwardFn backward;
    const Mat* view = nullptr;
  };

  Var<Scalar> push_view(const char* op, const Mat& value, bool requires_grad) {
    if (!value.allFinite()) throw NumericError(std::string("non-finite leaf ") + shape_string(value));
    nodes_.push_back(Node{op, Mat(), Mat(), requires_grad, nullptr, &value});
    return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
  }

  Var<Scalar> push(const char* op, Mat value, bool requires_grad, BackwardFn fn) {
    if (!value.allFinite()) {
      throw NumericError(std::string("non-finite value produced by ") + op + " " +
                         shape_string(value));
    }
    nodes_.push_back(Node{op, std::move(value), Mat(), requires_grad, std::move(fn), nullptr});
    return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
  }

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

template <typename Scalar>
Scalar Var<Scalar>::item() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("item: not a scalar " + shape_string(v));
  return v(0, 0);
}

}  // namespace genrank
