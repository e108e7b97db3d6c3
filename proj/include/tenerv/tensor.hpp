// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with reverse-mode automatic differentiation.
// A Tensor is a cheap handle onto a graph node; operations allocate fresh
// nodes and record a backprop closure when any input requires gradients.
// Gradients accumulate additively, so one parameter used in several places
// receives the sum of all contributions.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tenerv/error.hpp"
#include "tenerv/rng.hpp"

namespace tenerv {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {
inline thread_local bool grad_enabled = true;
}

// Disables graph recording in scope; evaluation-only passes use this.
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until backward reaches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;
  };

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return from_data(std::move(shape), {}, requires_grad);
  }

  static Tensor full(Shape shape, T fill, bool requires_grad = false) {
    std::vector<T> v(numel(shape), fill);
    return from_data(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    const std::size_t count = numel(shape);
    if (data.empty()) {
      data.assign(count, T(0));
    } else if (data.size() != count) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false) {
    std::vector<T> v(numel(shape));
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return from_data(std::move(shape), std::move(v), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return node_->value.size(); }

  std::span<T> value() { return {node_->value.data(), node_->value.size()}; }
  std::span<const T> value() const { return {node_->value.data(), node_->value.size()}; }
  T* data() { return node_->value.data(); }
  const T* data() const { return node_->value.data(); }

  T item() const {
    if (size() != 1) throw UsageError("item() requires a scalar tensor, got " + shape_str(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<T> grad() { return {node_->grad.data(), node_->grad.size()}; }
  std::span<const T> grad() const { return {node_->grad.data(), node_->grad.size()}; }
  void zero_grad() { node_->grad.clear(); }

  // Allocates an all-zero gradient if none was accumulated. A parameter a
  // batch never touched has a genuinely zero derivative.
  void materialize_grad() { ensure_grad(*node_); }

  // Reverse-mode sweep from a scalar loss. Every requires_grad node reachable
  // through the recorded graph receives (accumulates) its gradient.
  void backward() const {
    if (size() != 1)
      throw UsageError("backward requires a scalar loss, got shape " + shape_str(shape()));
    std::vector<Node*> order;
    topo_order(node_.get(), order);
    ensure_grad(*node_);
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backprop && !n->grad.empty()) n->backprop(*n);
    }
  }

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

  static void ensure_grad(Node& n) {
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), T(0));
  }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static void topo_order(Node* root, std::vector<Node*>& order) {
    // Iterative post-order DFS; order is fully determined by graph structure.
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Node* parent = node->parents[next++].get();
        if (parent->requires_grad && visited.insert(parent).second)
          stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node> node_;
};

namespace detail {

template <typename T>
using NodeT = typename Tensor<T>::Node;

// Wraps a freshly computed value into a graph node. The backprop closure is
// attached only when recording is on and some input needs gradients.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                      std::function<void(NodeT<T>&)> backprop) {
  bool needs = false;
  if (grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  Tensor<T> out = Tensor<T>::from_data(std::move(shape), std::move(value), needs);
  if (needs) {
    auto& n = *out.node();
    n.parents.reserve(parents.size());
    for (auto& p : parents) n.parents.push_back(p.node());
    n.backprop = std::move(backprop);
  }
  return out;
}

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": operand shapes differ, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("add", a, b);
  std::vector<T> v(a.size());
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] + pb[i];
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<T>(
      a.shape(), std::move(v), {a, b}, [an, bn](detail::NodeT<T>& self) {
        if (an->requires_grad) {
          Tensor<T>::ensure_grad(*an);
          for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          Tensor<T>::ensure_grad(*bn);
          for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("sub", a, b);
  std::vector<T> v(a.size());
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] - pb[i];
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<T>(
      a.shape(), std::move(v), {a, b}, [an, bn](detail::NodeT<T>& self) {
        if (an->requires_grad) {
          Tensor<T>::ensure_grad(*an);
          for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          Tensor<T>::ensure_grad(*bn);
          for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<T> v(a.size());
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] * pb[i];
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<T>(
      a.shape(), std::move(v), {a, b}, [an, bn](detail::NodeT<T>& self) {
        if (an->requires_grad) {
          Tensor<T>::ensure_grad(*an);
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
          Tensor<T>::ensure_grad(*bn);
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i] * an->value[i];
        }
      });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("div", a, b);
  std::vector<T> v(a.size());
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] / pb[i];
  auto* an = a.node().get();
  auto* bn = b.node().get();
  return detail::make_result<T>(
      a.shape(), std::move(v), {a, b}, [an, bn](detail::NodeT<T>& self) {
        if (an->requires_grad) {
          Tensor<T>::ensure_grad(*an);
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] / bn->value[i];
        }
        if (bn->requires_grad) {
          Tensor<T>::ensure_grad(*bn);
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T inv = T(1) / bn->value[i];
            bn->grad[i] -= self.grad[i] * an->value[i] * inv * inv;
          }
        }
      });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.size());
  const T* pa = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] + c;
  auto* an = a.node().get();
  return detail::make_result<T>(a.shape(), std::move(v), {a}, [an](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.size());
  const T* pa = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] * c;
  auto* an = a.node().get();
  return detail::make_result<T>(a.shape(), std::move(v), {a}, [an, c](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
}

// |x| with subgradient 0 at x == 0.
template <typename T>
Tensor<T> abs_val(const Tensor<T>& a) {
  std::vector<T> v(a.size());
  const T* pa = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(pa[i]);
  auto* an = a.node().get();
  return detail::make_result<T>(a.shape(), std::move(v), {a}, [an](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T x = an->value[i];
      if (x > T(0))
        an->grad[i] += self.grad[i];
      else if (x < T(0))
        an->grad[i] -= self.grad[i];
    }
  });
}

// max(x, floor); gradient passes only where x > floor.
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T floor) {
  std::vector<T> v(a.size());
  const T* pa = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pa[i] > floor ? pa[i] : floor;
  auto* an = a.node().get();
  return detail::make_result<T>(a.shape(), std::move(v), {a}, [an, floor](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (an->value[i] > floor) an->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& a, T exponent) {
  std::vector<T> v(a.size());
  const T* pa = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(pa[i], exponent);
  auto* an = a.node().get();
  return detail::make_result<T>(
      a.shape(), std::move(v), {a}, [an, exponent](detail::NodeT<T>& self) {
        Tensor<T>::ensure_grad(*an);
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          an->grad[i] += self.grad[i] * exponent * std::pow(an->value[i], exponent - T(1));
      });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  const T* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += pa[i];
  auto* an = a.node().get();
  return detail::make_result<T>({1}, {acc}, {a}, [an](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*an);
    const T g = self.grad[0];
    for (auto& x : an->grad) x += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.size() == 0) throw UsageError("mean of an empty tensor");
  T acc = 0;
  const T* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += pa[i];
  const T n = static_cast<T>(a.size());
  auto* an = a.node().get();
  // Dividing (not multiplying by 1/n) keeps mean-of-equal-values exact.
  return detail::make_result<T>({1}, {acc / n}, {a}, [an, n](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*an);
    const T g = self.grad[0] / n;
    for (auto& x : an->grad) x += g;
  });
}

// ---------------------------------------------------------------------------
// Structure

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  std::vector<T> v(a.data(), a.data() + a.size());
  auto* an = a.node().get();
  return detail::make_result<T>(std::move(shape), std::move(v), {a},
                                [an](detail::NodeT<T>& self) {
                                  Tensor<T>::ensure_grad(*an);
                                  for (std::size_t i = 0; i < self.grad.size(); ++i)
                                    an->grad[i] += self.grad[i];
                                });
}

// Concatenation along dimension 0; all trailing dimensions must agree.
template <typename T>
Tensor<T> concat0(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw UsageError("concat0 of zero tensors");
  Shape rest(parts[0].shape().begin() + 1, parts[0].shape().end());
  int dim0 = 0;
  for (const auto& p : parts) {
    Shape r(p.shape().begin() + 1, p.shape().end());
    if (r != rest)
      throw ShapeError("concat0: trailing dims differ, " + shape_str(parts[0].shape()) + " vs " +
                       shape_str(p.shape()));
    dim0 += p.dim(0);
  }
  Shape out_shape;
  out_shape.push_back(dim0);
  out_shape.insert(out_shape.end(), rest.begin(), rest.end());
  std::vector<T> v;
  v.reserve(numel(out_shape));
  for (const auto& p : parts) v.insert(v.end(), p.data(), p.data() + p.size());

  std::vector<detail::NodeT<T>*> nodes;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    nodes.push_back(p.node().get());
    offsets.push_back(off);
    off += p.size();
  }
  return detail::make_result<T>(
      std::move(out_shape), std::move(v), parts,
      [nodes, offsets](detail::NodeT<T>& self) {
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          auto* pn = nodes[k];
          if (!pn->requires_grad) continue;
          Tensor<T>::ensure_grad(*pn);
          const T* g = self.grad.data() + offsets[k];
          for (std::size_t i = 0; i < pn->grad.size(); ++i) pn->grad[i] += g[i];
        }
      });
}

// x scaled by one entry of a coefficient tensor; gradients reach both the
// data and that single coefficient. This is the building block of window
// fusion, where each term is weight[t,i] * grid_lookup(t+i).
template <typename T>
Tensor<T> scale_entry(const Tensor<T>& x, const Tensor<T>& coeffs, std::size_t flat_index) {
  if (flat_index >= coeffs.size())
    throw IndexError("scale_entry: coefficient index " + std::to_string(flat_index) +
                     " out of range for " + shape_str(coeffs.shape()));
  const T c = coeffs.data()[flat_index];
  std::vector<T> v(x.size());
  const T* px = x.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * px[i];
  auto* xn = x.node().get();
  auto* cn = coeffs.node().get();
  return detail::make_result<T>(
      x.shape(), std::move(v), {x, coeffs},
      [xn, cn, c, flat_index](detail::NodeT<T>& self) {
        if (xn->requires_grad) {
          Tensor<T>::ensure_grad(*xn);
          for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += c * self.grad[i];
        }
        if (cn->requires_grad) {
          Tensor<T>::ensure_grad(*cn);
          T acc = 0;
          for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * xn->value[i];
          cn->grad[flat_index] += acc;
        }
      });
}

// Linear blend of two rows of a [rows, ...] tensor: (1-f)*row(i0) + f*row(i1).
// With i0 == i1 the row is returned exactly (pass f = 0).
template <typename T>
Tensor<T> row_lerp(const Tensor<T>& table, int i0, int i1, T f) {
  if (table.ndim() < 1) throw ShapeError("row_lerp: table must have at least one dimension");
  const int rows = table.dim(0);
  if (i0 < 0 || i0 >= rows || i1 < 0 || i1 >= rows)
    throw IndexError("row_lerp: rows " + std::to_string(i0) + "," + std::to_string(i1) +
                     " out of range 0.." + std::to_string(rows - 1));
  Shape rest(table.shape().begin() + 1, table.shape().end());
  const std::size_t stride = numel(rest);
  std::vector<T> v(stride);
  const T* r0 = table.data() + static_cast<std::size_t>(i0) * stride;
  const T* r1 = table.data() + static_cast<std::size_t>(i1) * stride;
  if (i0 == i1 || f == T(0)) {
    for (std::size_t i = 0; i < stride; ++i) v[i] = r0[i];
  } else {
    const T w0 = T(1) - f;
    for (std::size_t i = 0; i < stride; ++i) v[i] = w0 * r0[i] + f * r1[i];
  }
  auto* tn = table.node().get();
  return detail::make_result<T>(
      std::move(rest), std::move(v), {table},
      [tn, i0, i1, f, stride](detail::NodeT<T>& self) {
        Tensor<T>::ensure_grad(*tn);
        T* g0 = tn->grad.data() + static_cast<std::size_t>(i0) * stride;
        T* g1 = tn->grad.data() + static_cast<std::size_t>(i1) * stride;
        const T w0 = T(1) - f;
        for (std::size_t i = 0; i < stride; ++i) {
          g0[i] += w0 * self.grad[i];
          g1[i] += f * self.grad[i];
        }
      });
}

}  // namespace tenerv
