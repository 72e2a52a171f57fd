#pragma once

#include <span>

#include "hast/classifier.hpp"

namespace hast {

double accuracy(std::span<const Label> truth, std::span<const Label> predicted);

// Unweighted mean of per-class F1; a class with precision + recall = 0 scores 0.
double macro_f1(std::span<const Label> truth, std::span<const Label> predicted, int num_classes);

// Scores `model` on a non-empty test set.
double evaluate(const ProbModel& model, std::span<const Instance> test, Metric metric);

// Trapezoidal area under y(x) divided by the x range. Needs >= 2 points and a
// strictly increasing x.
double auc(std::span<const double> x, std::span<const double> y);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};
MeanStd mean_std(std::span<const double> values);

}  // namespace hast
