#include "hast/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hast {

double accuracy(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size() || truth.empty())
    throw std::invalid_argument("accuracy needs equally sized, non-empty label lists");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const Label> truth, std::span<const Label> predicted, int num_classes) {
  if (truth.size() != predicted.size() || truth.empty())
    throw std::invalid_argument("macro-F1 needs equally sized, non-empty label lists");
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(C, 0.0), fp(C, 0.0), fn(C, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= C || p >= C) throw std::invalid_argument("label out of range in macro-F1");
    if (t == p) {
      tp[t] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[t] += 1.0;
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double precision = tp[c] + fp[c] > 0.0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] > 0.0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(C);
}

double evaluate(const ProbModel& model, std::span<const Instance> test, Metric metric) {
  if (test.empty()) throw std::invalid_argument("cannot evaluate on an empty test set");
  std::vector<Label> truth, predicted;
  truth.reserve(test.size());
  predicted.reserve(test.size());
  for (const auto& inst : test) {
    truth.push_back(inst.true_label);
    predicted.push_back(model.predict(inst.embedding).label);
  }
  return metric == Metric::Accuracy ? accuracy(truth, predicted)
                                    : macro_f1(truth, predicted, model.num_classes());
}

double auc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("auc needs matching x and y");
  if (x.size() < 2) throw std::invalid_argument("auc needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("auc needs strictly increasing x");
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  }
  return area / (x.back() - x.front());
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty set");
  // Shifted by the first value so identical inputs give exactly that value and std 0.
  const double shift = values.front();
  const auto n = static_cast<double>(values.size());
  double offset = 0.0;
  for (double v : values) offset += v - shift;
  offset /= n;
  MeanStd out;
  out.mean = shift + offset;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
    out.std = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

}  // namespace hast
