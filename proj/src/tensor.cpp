#include "nor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "nor/common.hpp"

namespace nor {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) {
    NOR_REQUIRE(d > 0, "non-positive dimension in shape ", shape_str(s));
    n *= d;
  }
  return n;
}

namespace {
thread_local bool g_grad_enabled = true;

std::shared_ptr<Node> new_node(Shape shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.assign(static_cast<std::size_t>(shape_numel(n->shape)), 0.0);
  n->requires_grad = requires_grad;
  return n;
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGrad::NoGrad() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGrad::~NoGrad() { g_grad_enabled = prev_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = new_node(std::move(shape), requires_grad);
  if (n->requires_grad) n->grad.assign(n->value.size(), 0.0);
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t = zeros(std::move(shape), false);
  std::fill(t.node_->value.begin(), t.node_->value.end(), v);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  NOR_SHAPE_CHECK(shape_numel(shape) == static_cast<std::int64_t>(data.size()),
                  "data size ", data.size(), " does not fill shape ", shape_str(shape));
  auto n = new_node(std::move(shape), requires_grad);
  n->value = std::move(data);
  if (n->requires_grad) n->grad.assign(n->value.size(), 0.0);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

double Tensor::item() const {
  NOR_SHAPE_CHECK(numel() == 1, "item() on tensor of shape ", shape_str(shape()));
  return node_->value[0];
}

void Tensor::set_requires_grad(bool b) {
  node_->requires_grad = b;
  if (b && node_->grad.size() != node_->value.size())
    node_->grad.assign(node_->value.size(), 0.0);
}

std::span<double> Tensor::grad() {
  NOR_REQUIRE(node_->requires_grad, "grad() on a tensor that does not require gradients");
  if (node_->grad.size() != node_->value.size()) node_->grad.assign(node_->value.size(), 0.0);
  return {node_->grad.data(), node_->grad.size()};
}

std::span<const double> Tensor::grad() const {
  NOR_REQUIRE(node_->requires_grad, "grad() on a tensor that does not require gradients");
  NOR_REQUIRE(node_->grad.size() == node_->value.size(), "gradient storage not allocated");
  return {node_->grad.data(), node_->grad.size()};
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : node_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor make_op(Shape shape, std::vector<Tensor> parents, std::function<void(Node&)> backprop) {
  bool track = g_grad_enabled;
  if (track) {
    track = false;
    for (const Tensor& p : parents)
      if (p.defined() && p.node()->requires_grad) {
        track = true;
        break;
      }
  }
  auto n = new_node(std::move(shape), track);
  if (track) {
    n->grad.assign(n->value.size(), 0.0);
    n->parents.reserve(parents.size());
    for (Tensor& p : parents) n->parents.push_back(p.handle());
    n->backprop = std::move(backprop);
  }
  return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
  NOR_REQUIRE(loss.defined(), "backward on an undefined tensor");
  NOR_SHAPE_CHECK(loss.numel() == 1, "backward expects a scalar, got ", shape_str(loss.shape()));
  Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order over the tape; children before parents in `order`.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  if (root->grad.size() != root->value.size()) root->grad.assign(root->value.size(), 0.0);
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backprop) continue;
    for (auto& p : n->parents)
      if (p->requires_grad && p->grad.size() != p->value.size())
        p->grad.assign(p->value.size(), 0.0);
    n->backprop(*n);
  }
}

}  // namespace nor
