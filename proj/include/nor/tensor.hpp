#ifndef NOR_TENSOR_HPP_
#define NOR_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nor {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

// One node of the reverse-mode tape. Values are row-major doubles; grad is
// allocated iff the node participates in differentiation.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents
  std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }
};

// Dense n-dimensional tensor with shared-node semantics: copies alias the
// same storage and tape node, like the usual define-by-run engines.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return node_->numel(); }

  std::span<double> values() { return {node_->value.data(), node_->value.size()}; }
  std::span<const double> values() const { return {node_->value.data(), node_->value.size()}; }
  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  double at(std::int64_t i) const { return node_->value[static_cast<std::size_t>(i)]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b);
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& handle() const { return node_; }

  bool all_finite() const;

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
  friend Tensor make_op(Shape shape, std::vector<Tensor> parents,
                        std::function<void(Node&)> backprop);
};

// Builds a tape node for an op output. When grad mode is off or no parent
// needs gradients, the node is a plain value with no tape edges.
Tensor make_op(Shape shape, std::vector<Tensor> parents,
               std::function<void(Node&)> backprop);

// Scoped "no autodiff" switch for inference paths.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool prev_;
};
bool grad_enabled();

// Reverse-mode sweep from a scalar loss. Accumulates into .grad of every
// reachable node that requires gradients; call zero_grad between uses.
void backward(const Tensor& loss);

// --- primitive operations ---------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor one_minus(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// y = W x for W [r,c], x [c].
Tensor matvec(const Tensor& W, const Tensor& x);
// y = W^T x for W [r,c], x [r]; doubles as the weighted sum of W's rows.
Tensor matvec_t(const Tensor& W, const Tensor& x);
// C = A B^T for A [M,K], B [N,K].
Tensor matmul_abt(const Tensor& A, const Tensor& B);
// M[i,:] + v for M [r,c], v [c].
Tensor add_rowvec(const Tensor& M, const Tensor& v);
// Column means of M [r,c] -> [c].
Tensor mean_rows(const Tensor& M);

Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);

// Concatenation along axis 0; trailing dims must agree.
Tensor concat(const std::vector<Tensor>& parts);
// Row i of M [r,c] -> [c]; gradient scatters back into the row.
Tensor select_row(const Tensor& M, int row);
// Element i of a vector -> scalar.
Tensor pick(const Tensor& v, int i);
Tensor sum(const Tensor& a);
Tensor sum_squares(const Tensor& a);
// Elementwise sum of same-shaped tensors.
Tensor add_n(const std::vector<Tensor>& parts);

// 3x3/stride1/pad1 convolution: input [Cin,H,W], kernels [Cout,Cin,3,3],
// bias [Cout] -> [Cout,H,W].
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);
// Non-overlapping max pool: [C,H,W] -> [C,H/window,W/window].
Tensor max_pool2d(const Tensor& input, int window);
// [C,H,W] -> [H*W, C]: one row of channel features per spatial region.
Tensor chw_to_regions(const Tensor& input);

struct GruWeights {
  Tensor Wz, Uz, bz;
  Tensor Wr, Ur, br;
  Tensor Wh, Uh, bh;
};

// Gate convention:
//   z = sigmoid(Wz x + Uz s + bz)
//   r = sigmoid(Wr x + Ur s + br)
//   hcand = tanh(Wh x + Uh (r*s) + bh)
//   s' = (1-z)*s + z*hcand
Tensor gru_cell(const Tensor& x, const Tensor& s_prev, const GruWeights& w);

// Uniform Xavier/Glorot init on +-sqrt(6/(fan_in+fan_out)), reproducible for
// a fixed seed. Fans: [r,c] -> (c, r); [Co,Ci,kh,kw] -> (Ci*kh*kw, Co*kh*kw);
// vectors [n] -> (n, 1).
Tensor xavier_init(const Shape& shape, std::uint64_t seed);

}  // namespace nor

#endif  // NOR_TENSOR_HPP_
