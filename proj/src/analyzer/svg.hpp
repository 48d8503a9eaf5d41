// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace gossipwatch::analyzer::svg {

struct Bar {
  std::string label;
  double value = 0;
};

/// Self-contained SVG documents. An empty series renders a "no data" note.
std::string bar_chart(const std::string &title, const std::string &y_label,
                      const std::vector<Bar> &bars);

std::string scatter_chart(const std::string &title, const std::string &x_label,
                          const std::string &y_label,
                          const std::vector<std::pair<double, double>> &points);

}  // namespace gossipwatch::analyzer::svg
