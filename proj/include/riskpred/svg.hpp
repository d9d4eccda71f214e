#ifndef RISKPRED_SVG_HPP
#define RISKPRED_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace riskpred::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Standalone SVG line plot with axes, ticks and a legend. Output is a pure
// function of the inputs (fixed float formatting), so identical data gives
// identical bytes.
std::string line_plot(const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<Series>& series);

// Horizontal bar chart, one bar per (label, value), zero line marked.
std::string bar_chart(const std::string& title,
                      const std::vector<std::pair<std::string, double>>& bars);

}  // namespace riskpred::svg

#endif  // RISKPRED_SVG_HPP
