#pragma once

// Confusion-matrix segmentation metrics: pixel accuracy, mean accuracy,
// mean IU and frequency-weighted IU. Row i is the ground-truth class, column
// j the prediction. Classes without ground-truth support are left out of the
// class means.

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "semfuse/error.hpp"

namespace semfuse {

class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& what) : Error("metrics", what) {}
};

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : n_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const noexcept { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }

  std::uint64_t support(std::size_t i) const {  // t_i
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += at(i, j);
    return s;
  }
  std::uint64_t predicted_count(std::size_t j) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, j);
    return s;
  }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  template <typename Label>
  void accumulate(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) {
      throw ContractError("metrics", "prediction and ground truth differ in size");
    }
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const auto t = static_cast<std::size_t>(truth[k]);
      const auto p = static_cast<std::size_t>(predicted[k]);
      if (t >= n_ || p >= n_) throw ContractError("metrics", "label outside the class range");
      ++at(t, p);
    }
  }

  template <typename Label>
  void accumulate(const std::vector<Label>& predicted, const std::vector<Label>& truth) {
    accumulate(std::span<const Label>(predicted), std::span<const Label>(truth));
  }

  void merge(const ConfusionMatrix& other) {
    if (other.n_ != n_) throw ContractError("metrics", "cannot merge confusion matrices of different size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  // IU of class i: n_ii / (t_i + sum_j n_ji - n_ii).
  double class_iu(std::size_t i) const {
    const double denom = static_cast<double>(support(i) + predicted_count(i) - at(i, i));
    return denom > 0.0 ? static_cast<double>(at(i, i)) / denom : 0.0;
  }

  double pixel_accuracy() const {
    require_nonempty();
    std::uint64_t diag = 0;
    for (std::size_t i = 0; i < n_; ++i) diag += at(i, i);
    return static_cast<double>(diag) / static_cast<double>(total());
  }

  double mean_accuracy() const {
    require_nonempty();
    double acc = 0.0;
    std::size_t ncl = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto t = support(i);
      if (t == 0) continue;
      acc += static_cast<double>(at(i, i)) / static_cast<double>(t);
      ++ncl;
    }
    return acc / static_cast<double>(ncl);
  }

  double mean_iu() const {
    require_nonempty();
    double acc = 0.0;
    std::size_t ncl = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (support(i) == 0) continue;
      acc += class_iu(i);
      ++ncl;
    }
    return acc / static_cast<double>(ncl);
  }

  double freq_weighted_iu() const {
    require_nonempty();
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) acc += static_cast<double>(support(i)) * class_iu(i);
    return acc / static_cast<double>(total());
  }

 private:
  void require_nonempty() const {
    if (total() == 0) throw UndefinedMetric("metrics are undefined for an empty confusion matrix");
  }

  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

struct MetricSummary {
  double pixel_accuracy;
  double mean_accuracy;
  double mean_iu;
  double freq_weighted_iu;
};

inline MetricSummary summarize(const ConfusionMatrix& cm) {
  return {cm.pixel_accuracy(), cm.mean_accuracy(), cm.mean_iu(), cm.freq_weighted_iu()};
}

// Percentages with two decimals.
inline std::string metrics_csv(const MetricSummary& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "pixel_acc,mean_acc,mean_iu,fw_iu\n%.2f,%.2f,%.2f,%.2f\n",
                100 * m.pixel_accuracy, 100 * m.mean_accuracy, 100 * m.mean_iu,
                100 * m.freq_weighted_iu);
  return buf;
}

inline std::string metrics_table(const MetricSummary& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-12s %-12s %-12s %-12s\n%-12.2f %-12.2f %-12.2f %-12.2f\n", "pixel acc.",
                "mean acc.", "mean IU", "f.w. IU", 100 * m.pixel_accuracy, 100 * m.mean_accuracy,
                100 * m.mean_iu, 100 * m.freq_weighted_iu);
  return buf;
}

}  // namespace semfuse
