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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "bbfi/error.h"
#include "bbfi/plot.h"

namespace bbfi {
namespace {

using ::testing::HasSubstr;

std::size_t Count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

Curve MakeCurve(std::string label, std::vector<double> x, std::vector<double> y) {
  Curve c;
  c.label = std::move(label);
  c.abscissa = std::move(x);
  c.ordinates = std::move(y);
  return c;
}

TEST(PlotTest, SingleCurveIsOnePolyline) {
  PlotSpec spec;
  spec.curves = {MakeCurve("a", {0, 1}, {0, 1})};
  const std::string svg = RenderLinePlot(spec);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(Count(svg, "<polyline"), 1u);
  EXPECT_THAT(svg, HasSubstr("</svg>"));
}

TEST(PlotTest, FigureTwoPanel) {
  PlotSpec spec;
  spec.curves = {MakeCurve("ICI 1", {1, 2, 3}, {0, 0.65, 0.7}),
                 MakeCurve("ICI 2", {1, 2, 3}, {0.6, 0, 0.5}),
                 MakeCurve("ICI 3", {1, 2, 3}, {0.3, 0.25, 0})};
  spec.aggregates = {MakeCurve("PI x1", {1, 2, 3}, {0.3, 0.3, 0.4})};
  spec.highlight_extremes = true;
  spec.title = "x < y & z";
  const std::string svg = RenderLinePlot(spec);
  EXPECT_EQ(Count(svg, "<polyline"), 4u);
  EXPECT_THAT(svg, HasSubstr("stroke-width=\"3\""));
  // ICI 1 has the largest mean, ICI 3 the smallest.
  EXPECT_THAT(svg, HasSubstr("<title>ICI 1</title>"));
  EXPECT_THAT(svg, HasSubstr("x &lt; y &amp; z"));
  EXPECT_EQ(svg, RenderLinePlot(spec));
}

TEST(PlotTest, HistogramAndCategoricalTicks) {
  PlotSpec spec;
  Curve c = MakeCurve("PD", {0, 1}, {1, 2});
  c.abscissa_labels = {"red", "blue"};
  spec.aggregates = {c};
  spec.histogram = {0, 0, 1, 1, 1};
  const std::string svg = RenderLinePlot(spec);
  EXPECT_THAT(svg, HasSubstr(">red<"));
  EXPECT_THAT(svg, HasSubstr(">blue<"));
  EXPECT_GE(Count(svg, "<rect"), 2u);
}

TEST(PlotTest, Rejections) {
  EXPECT_THROW(RenderLinePlot(PlotSpec{}), Error);
  PlotSpec bad;
  bad.curves = {MakeCurve("a", {0, 1}, {0, NAN})};
  EXPECT_THROW(RenderLinePlot(bad), Error);
  bad.curves = {MakeCurve("a", {0, 1}, {0})};
  EXPECT_THROW(RenderLinePlot(bad), Error);
}

TEST(PlotTest, DegenerateRangesStillRender) {
  PlotSpec spec;
  spec.curves = {MakeCurve("flat", {2, 2}, {5, 5})};
  const std::string svg = RenderLinePlot(spec);
  EXPECT_EQ(Count(svg, "<polyline"), 1u);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
}

}  // namespace
}  // namespace bbfi
