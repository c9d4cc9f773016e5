#pragma once

// Minimal SVG line charts for trajectories.

#include <string>
#include <vector>

#include "pfac/simkit.hpp"

namespace pfac::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t [s]";
  std::string y_label;
  int width = 720;
  int height = 400;
};

/// A self-contained SVG document with axes, ticks and a legend.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& opts);

/// x_i(t), k_i(t) and u(t) charts of a trajectory.
std::string plot_states(const sim::Trajectory& traj);
std::string plot_gains(const sim::Trajectory& traj);
std::string plot_input(const sim::Trajectory& traj);

}  // namespace pfac::svg
