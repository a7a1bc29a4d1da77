#pragma once

#include <string>
#include <vector>

#include "lowres/common.hpp"
#include "lowres/rng.hpp"

namespace lowres {

// Class-balanced batch stream: every batch holds floor(batch/k) samples per
// class, with the remainder rotating round-robin over classes; minority
// classes are resampled with replacement. Deterministic per seed.
class BalancedBatcher {
public:
  BalancedBatcher(const std::vector<int>& labels, int num_classes, int batch,
                  uint64_t seed)
      : batch_(batch), rng_(derive_seed(seed, "balanced-batches")) {
    require(num_classes >= 2, "bad-batcher", "need >= 2 classes");
    require(batch >= num_classes, "bad-batcher",
            "batch " + std::to_string(batch) + " smaller than class count " +
                std::to_string(num_classes));
    pools_.resize(size_t(num_classes));
    for (size_t i = 0; i < labels.size(); ++i) {
      require(labels[i] >= 0 && labels[i] < num_classes, "bad-label",
              "label " + std::to_string(labels[i]) + " out of range");
      pools_[size_t(labels[i])].push_back(i);
    }
    for (int c = 0; c < num_classes; ++c)
      require(!pools_[size_t(c)].empty(), "empty-class",
              "class " + std::to_string(c) + " has no training samples");
  }

  int batch_size() const { return batch_; }

  std::vector<size_t> next() {
    const int k = int(pools_.size());
    const int base = batch_ / k;
    const int rem = batch_ % k;
    std::vector<size_t> out;
    out.reserve(size_t(batch_));
    for (int c = 0; c < k; ++c) {
      int quota = base;
      for (int j = 0; j < rem; ++j)
        if (int((batch_index_ * uint64_t(rem) + uint64_t(j)) % uint64_t(k)) == c)
          ++quota;
      const auto& pool = pools_[size_t(c)];
      for (int i = 0; i < quota; ++i) out.push_back(pool[rng_.index(pool.size())]);
    }
    ++batch_index_;
    return out;
  }

private:
  int batch_;
  uint64_t batch_index_ = 0;
  Rng rng_;
  std::vector<std::vector<size_t>> pools_;
};

}  // namespace lowres
