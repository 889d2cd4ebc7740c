/*
 * Copyright 2026 The bbfi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BBFI_PLOT_H_
#define BBFI_PLOT_H_

#include <string>
#include <vector>

#include "bbfi/importance.h"

namespace bbfi {

struct PlotSpec {
  // Individual curves (ICI, ICE), drawn thin.
  std::vector<Curve> curves;
  // Aggregate curves (PI, PD), drawn heavy.
  std::vector<Curve> aggregates;
  std::string title;
  std::string x_label;
  std::string y_label;
  // Colour the individual curves with the largest and smallest mean
  // ordinate (the Monte-Carlo integral of the curve).
  bool highlight_extremes = false;
  // Abscissa sample for a marginal histogram strip; empty disables it.
  std::vector<double> histogram;
};

// Standalone SVG document; identical specs render to identical bytes.
std::string RenderLinePlot(const PlotSpec& spec);

}  // namespace bbfi

#endif  // BBFI_PLOT_H_
