// SPDX-License-Identifier: Apache-2.0
#include "svg.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace gossipwatch::analyzer::svg {

namespace {

constexpr double kWidth = 900;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 110;

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string &title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(title));
}

std::string no_data(const std::string &title) {
  return header(title)
         + fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#777\">"
                       "no data</text>\n</svg>\n",
                       kWidth / 2, kHeight / 2);
}

double nice_max(double v) {
  return v > 0 ? v * 1.05 : 1.0;
}

std::string axes(double max_y, const std::string &y_label) {
  const double plot_h = kHeight - kTop - kBottom;
  std::string out = fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<text x=\"16\" y=\"{4}\" transform=\"rotate(-90 16 {4})\" "
      "text-anchor=\"middle\">{5}</text>\n",
      kLeft, kTop, kTop + plot_h, kWidth - kRight, kTop + plot_h / 2, escape(y_label));
  for (int i = 0; i <= 4; ++i) {
    const double v = max_y * i / 4;
    const double y = kTop + plot_h - plot_h * i / 4;
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", kLeft - 4,
        y + 4, v);
  }
  return out;
}

}  // namespace

std::string bar_chart(const std::string &title, const std::string &y_label,
                      const std::vector<Bar> &bars) {
  if (bars.empty()) {
    return no_data(title);
  }
  double max_v = 0;
  for (const auto &b : bars) {
    max_v = std::max(max_v, b.value);
  }
  const double max_y = nice_max(max_v);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / static_cast<double>(bars.size());
  const bool labels = bars.size() <= 60;

  std::string out = header(title) + axes(max_y, y_label);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = plot_h * std::max(0.0, bars[i].value) / max_y;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.1;
    out += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
        "fill=\"#4a7ab5\"><title>{}: {:.6f}</title></rect>\n",
        x, kTop + plot_h - h, slot * 0.8, h, escape(bars[i].label), bars[i].value);
    if (labels) {
      const double lx = x + slot * 0.4;
      const double ly = kTop + plot_h + 12;
      out += fmt::format(
          "<text x=\"{0:.2f}\" y=\"{1:.2f}\" transform=\"rotate(45 {0:.2f} {1:.2f})\">"
          "{2}</text>\n",
          lx, ly, escape(bars[i].label));
    }
  }
  out += "</svg>\n";
  return out;
}

std::string scatter_chart(const std::string &title, const std::string &x_label,
                          const std::string &y_label,
                          const std::vector<std::pair<double, double>> &points) {
  if (points.empty()) {
    return no_data(title);
  }
  double max_x = 0;
  double max_y = 0;
  for (const auto &[x, y] : points) {
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  max_x = nice_max(max_x);
  max_y = nice_max(max_y);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  std::string out = header(title) + axes(max_y, y_label);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + plot_w / 2, kHeight - kBottom + 40, escape(x_label));
  for (int i = 0; i <= 4; ++i) {
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.1f}</text>\n",
                       kLeft + plot_w * i / 4, kTop + plot_h + 16, max_x * i / 4);
  }
  for (const auto &[x, y] : points) {
    out += fmt::format(
        "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#c0504d\" fill-opacity=\"0.7\"/>\n",
        kLeft + plot_w * x / max_x, kTop + plot_h - plot_h * y / max_y);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace gossipwatch::analyzer::svg
