#include "pfac/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace pfac::svg {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
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

// Round step of roughly span/5 from {1, 2, 5} x 10^k.
double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2.0 * mag;
  if (r < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-12, std::abs(lo) * 0.05 + 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& opts) {
  const double left = 70, right = 20, top = 36, bottom = 48;
  const double w = opts.width - left - right;
  const double h = opts.height - top - bottom;

  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.finish();
  ry.finish();
  const double ystep = nice_step(ry.hi - ry.lo);
  ry.lo = std::floor(ry.lo / ystep) * ystep;
  ry.hi = std::ceil(ry.hi / ystep) * ystep;
  const double xstep = nice_step(rx.hi - rx.lo);

  auto px = [&](double v) { return left + (v - rx.lo) / (rx.hi - rx.lo) * w; };
  auto py = [&](double v) { return top + (ry.hi - v) / (ry.hi - ry.lo) * h; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      opts.width, opts.height, opts.width, opts.height);
  if (!opts.title.empty()) {
    out += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       opts.width / 2, escape(opts.title));
  }

  for (double v = ry.lo; v <= ry.hi + 0.5 * ystep; v += ystep) {
    const double y = py(v);
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", left, y,
                       left + w, y);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", left - 6, y + 4,
                       std::abs(v) < 1e-12 * ystep ? 0.0 : v);
  }
  for (double v = std::ceil(rx.lo / xstep) * xstep; v <= rx.hi + 1e-9 * xstep; v += xstep) {
    const double x = px(v);
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", x, top, x,
                       top + h);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", x, top + h + 16, v);
  }
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                     top, w, h);
  out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + w / 2,
                     opts.height - 10, escape(opts.x_label));
  if (!opts.y_label.empty()) {
    out += fmt::format("<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">{}</text>\n",
                       top + h / 2, top + h / 2, escape(opts.y_label));
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string pts;
    const std::size_t count = std::min(s.x.size(), s.y.size());
    for (std::size_t j = 0; j < count; ++j) {
      if (!std::isfinite(s.x[j]) || !std::isfinite(s.y[j])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(s.x[j]), py(s.y[j]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
    const double ly = top + 14 + 16 * static_cast<double>(i);
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       left + w - 90, ly - 4, left + w - 70, ly - 4, color);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", left + w - 64, ly, escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

namespace {

std::vector<double> times(const sim::Trajectory& traj) {
  std::vector<double> t;
  t.reserve(traj.samples.size());
  for (const auto& s : traj.samples) t.push_back(s.t);
  return t;
}

}  // namespace

std::string plot_states(const sim::Trajectory& traj) {
  std::vector<Series> series;
  const auto t = times(traj);
  for (std::size_t i = 0; i < traj.n; ++i) {
    Series s{fmt::format("x{}", i + 1), t, {}};
    for (const auto& smp : traj.samples) s.y.push_back(smp.x[i]);
    series.push_back(std::move(s));
  }
  return line_plot(series, {traj.scenario + ": states", "t [s]", "x"});
}

std::string plot_gains(const sim::Trajectory& traj) {
  std::vector<Series> series;
  const auto t = times(traj);
  for (std::size_t i = 0; i < traj.gain_labels.size(); ++i) {
    Series s{traj.gain_labels[i], t, {}};
    for (const auto& smp : traj.samples) s.y.push_back(smp.k[i]);
    series.push_back(std::move(s));
  }
  return line_plot(series, {traj.scenario + ": adaptive gains", "t [s]", "k"});
}

std::string plot_input(const sim::Trajectory& traj) {
  Series s{"u", times(traj), {}};
  for (const auto& smp : traj.samples) s.y.push_back(smp.u);
  return line_plot({s}, {traj.scenario + ": control input", "t [s]", "u"});
}

}  // namespace pfac::svg
