#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lowres/common.hpp"
#include "lowres/rng.hpp"

namespace lowres {

inline size_t numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) n *= size_t(d);
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

// N-dimensional row-major tensor. Values are immutable once an op has produced
// them; only the grad buffer is written after creation (by backward). The
// canonical image layout is [batch, channels, height, width].
template <class T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> v;
  std::vector<T> grad;  // allocated lazily by backward
  bool requires_grad = false;

  size_t size() const { return v.size(); }

  int dim(size_t i) const { return shape[i]; }

  void ensure_grad() {
    if (grad.size() != v.size()) grad.assign(v.size(), T(0));
  }

  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
  }
};

template <class T>
using TensorPtrT = std::shared_ptr<TensorT<T>>;

using Tensor = TensorT<float>;
using TensorPtr = TensorPtrT<float>;

template <class T>
void check_positive_shape(const std::vector<int>& shape, const char* where) {
  for (int d : shape)
    require(d > 0, "bad-shape",
            std::string(where) + ": non-positive extent in " + shape_str(shape));
}

// NaN/Inf fail fast: every op output (and every leaf created from external
// data) is scanned before it enters the graph.
template <class T>
void check_finite(const TensorT<T>& t, const char* where) {
  for (const T& x : t.v)
    if (!std::isfinite(double(x)))
      fail("non-finite", std::string(where) + ": tensor " + shape_str(t.shape) +
                             " contains NaN or Inf");
}

template <class T>
TensorPtrT<T> zeros(std::vector<int> shape, bool requires_grad = false) {
  check_positive_shape<T>(shape, "zeros");
  auto t = std::make_shared<TensorT<T>>();
  t->v.assign(numel(shape), T(0));
  t->shape = std::move(shape);
  t->requires_grad = requires_grad;
  return t;
}

template <class T>
TensorPtrT<T> full(std::vector<int> shape, T value, bool requires_grad = false) {
  auto t = zeros<T>(std::move(shape), requires_grad);
  std::fill(t->v.begin(), t->v.end(), value);
  check_finite(*t, "full");
  return t;
}

template <class T>
TensorPtrT<T> from_vec(std::vector<int> shape, std::vector<T> data,
                       bool requires_grad = false) {
  check_positive_shape<T>(shape, "from_vec");
  require(numel(shape) == data.size(), "bad-shape",
          "from_vec: " + shape_str(shape) + " cannot hold " +
              std::to_string(data.size()) + " values");
  auto t = std::make_shared<TensorT<T>>();
  t->shape = std::move(shape);
  t->v = std::move(data);
  t->requires_grad = requires_grad;
  check_finite(*t, "from_vec");
  return t;
}

template <class T>
TensorPtrT<T> randn(std::vector<int> shape, Rng& rng, T stddev = T(1),
                    bool requires_grad = false) {
  auto t = zeros<T>(std::move(shape), requires_grad);
  for (auto& x : t->v) x = T(rng.normal(0.0, double(stddev)));
  return t;
}

template <class T>
TensorPtrT<T> clone_values(const TensorPtrT<T>& src) {
  auto t = std::make_shared<TensorT<T>>();
  t->shape = src->shape;
  t->v = src->v;
  t->requires_grad = src->requires_grad;
  return t;
}

}  // namespace lowres
