#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace hast {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_std;  // optional band, empty or same length as y
};

// Score-vs-labeled-count line chart, one polyline per series with an optional
// +/- std band.
std::string render_learning_curves_svg(std::span<const PlotSeries> series, const std::string& title,
                                       const std::string& y_label);

// Accepts an aggregate document (mean_scores/std_scores) or a single curve
// document (points).
PlotSeries series_from_json(const nlohmann::json& doc, const std::string& name);

}  // namespace hast
