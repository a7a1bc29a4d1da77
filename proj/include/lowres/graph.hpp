#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lowres/tensor.hpp"

namespace lowres {

// Reverse-mode tape. Ops push one node per executed operation in execution
// order; backward replays the tape once, in reverse, accumulating into the
// grad buffers of every tensor that requires grad. Accumulation order is the
// tape order, so identical graphs produce bitwise-identical gradients.
//
// A graph constructed with recording=false runs ops forward-only (inference).
template <class T>
class GraphT {
public:
  explicit GraphT(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  void backward(const TensorPtrT<T>& root) {
    require(root->size() == 1, "backward-nonscalar",
            "backward root must be scalar, got " + shape_str(root->shape));
    root->ensure_grad();
    root->grad[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

private:
  bool recording_;
  std::vector<std::function<void()>> nodes_;
};

using Graph = GraphT<float>;

}  // namespace lowres
