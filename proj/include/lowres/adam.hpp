#pragma once

#include <cmath>
#include <vector>

#include "lowres/tensor.hpp"

namespace lowres {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are created shape-matched to the
// parameter list at construction; the update runs in double and casts back,
// so two runs over identical gradients are bitwise identical.
template <class T>
class AdamT {
public:
  AdamT(const std::vector<TensorPtrT<T>>& params, AdamHyper hyper = {})
      : hyper_(hyper) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  int64_t step_count() const { return t_; }

  void step(const std::vector<TensorPtrT<T>>& params) {
    require(params.size() == m_.size(), "bad-shape",
            "adam_step: parameter list size changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, double(t_));
    for (size_t pi = 0; pi < params.size(); ++pi) {
      auto& p = *params[pi];
      require(p.size() == m_[pi].size(), "bad-shape",
              "adam_step: parameter " + std::to_string(pi) +
                  " shape does not match its moment buffers");
      p.ensure_grad();
      for (size_t i = 0; i < p.size(); ++i) {
        const double gr = double(p.grad[i]);
        m_[pi][i] = hyper_.beta1 * m_[pi][i] + (1.0 - hyper_.beta1) * gr;
        v_[pi][i] = hyper_.beta2 * v_[pi][i] + (1.0 - hyper_.beta2) * gr * gr;
        const double mhat = m_[pi][i] / bc1;
        const double vhat = v_[pi][i] / bc2;
        p.v[i] = T(double(p.v[i]) - hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps));
      }
    }
  }

private:
  AdamHyper hyper_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

using Adam = AdamT<float>;

}  // namespace lowres
