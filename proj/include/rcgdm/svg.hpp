// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace rcgdm::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lo;  // optional error bar bounds, same length as y
    std::vector<double> hi;
    bool step = false;       // draw as a histogram-style staircase
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 480;
    int height = 360;
};

/// Self-contained SVG document for a line plot.
std::string render(const Plot& plot);

}  // namespace rcgdm::svg
