#pragma once

#include <cmath>
#include <vector>

#include "lowres/graph.hpp"
#include "lowres/ops.hpp"

namespace lowres {

// Mean squared error; reduction accumulates in double.
// d(loss)/d(pred) = 2*(pred - target)/N
template <class T>
TensorPtrT<T> mse_loss(GraphT<T>& g, const TensorPtrT<T>& pred,
                       const TensorPtrT<T>& target) {
  require(pred->shape == target->shape, "bad-shape",
          "mse_loss: " + shape_str(pred->shape) + " vs " +
              shape_str(target->shape));
  const size_t n = pred->size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double diff = double(pred->v[i]) - double(target->v[i]);
    acc += diff * diff;
  }
  auto out = from_vec<T>({1}, {T(acc / double(n))});
  out->requires_grad = pred->requires_grad || target->requires_grad;
  check_finite(*out, "mse_loss");
  if (g.recording() && out->requires_grad) {
    g.record([pred, target, out, n]() {
      if (detail::no_outgrad(out)) return;
      const T go = out->grad[0];
      const T scale = T(2) / T(n);
      if (pred->requires_grad) {
        pred->ensure_grad();
        for (size_t i = 0; i < n; ++i)
          pred->grad[i] += scale * (pred->v[i] - target->v[i]) * go;
      }
      if (target->requires_grad) {
        target->ensure_grad();
        for (size_t i = 0; i < n; ++i)
          target->grad[i] -= scale * (pred->v[i] - target->v[i]) * go;
      }
    });
  }
  return out;
}

// Mean negative log-softmax of the true class, stabilized by max-subtraction.
// d(loss)/d(logits) = (softmax - onehot)/b
template <class T>
TensorPtrT<T> softmax_cross_entropy(GraphT<T>& g, const TensorPtrT<T>& logits,
                                    const std::vector<int>& labels) {
  require(logits->shape.size() == 2, "bad-shape",
          "softmax_cross_entropy: logits must be [b,k], got " +
              shape_str(logits->shape));
  const int b = logits->shape[0], k = logits->shape[1];
  require(int(labels.size()) == b, "bad-shape",
          "softmax_cross_entropy: " + std::to_string(labels.size()) +
              " labels for batch " + std::to_string(b));
  for (int i = 0; i < b; ++i)
    require(labels[i] >= 0 && labels[i] < k, "bad-label",
            "softmax_cross_entropy: label " + std::to_string(labels[i]) +
                " out of range [0," + std::to_string(k) + ")");
  // log-sum-exp per row, in double
  auto lse = std::make_shared<std::vector<double>>(b);
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const T* row = logits->v.data() + size_t(i) * k;
    double m = double(row[0]);
    for (int j = 1; j < k; ++j) m = std::max(m, double(row[j]));
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(double(row[j]) - m);
    (*lse)[i] = m + std::log(s);
    total += (*lse)[i] - double(row[labels[i]]);
  }
  auto out = from_vec<T>({1}, {T(total / double(b))});
  out->requires_grad = logits->requires_grad;
  check_finite(*out, "softmax_cross_entropy");
  if (g.recording() && out->requires_grad) {
    g.record([logits, out, labels, lse, b, k]() {
      if (detail::no_outgrad(out)) return;
      logits->ensure_grad();
      const double go = double(out->grad[0]) / double(b);
      for (int i = 0; i < b; ++i) {
        const T* row = logits->v.data() + size_t(i) * k;
        T* grow = logits->grad.data() + size_t(i) * k;
        for (int j = 0; j < k; ++j) {
          const double p = std::exp(double(row[j]) - (*lse)[i]);
          const double onehot = (j == labels[i]) ? 1.0 : 0.0;
          grow[j] += T((p - onehot) * go);
        }
      }
    });
  }
  return out;
}

}  // namespace lowres
