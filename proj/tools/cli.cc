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

#include "cli.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "bbfi/data.h"
#include "bbfi/effects.h"
#include "bbfi/error.h"
#include "bbfi/importance.h"
#include "bbfi/loss.h"
#include "bbfi/models.h"
#include "bbfi/numeric.h"
#include "bbfi/parallel.h"
#include "bbfi/plot.h"
#include "bbfi/shapley.h"
#include "bbfi/sim.h"
#include "bbfi/table_io.h"
#include "json.hpp"

namespace bbfi::cli {
namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  // Data and model source.
  std::string data;
  std::string target = "y";
  std::string categorical;
  std::string model;
  std::string fit;
  std::string external;
  std::string train;
  // Analysis.
  std::vector<std::string> features;
  std::string grid = "auto";
  std::size_t grid_m = 100;
  std::string grid_values;
  std::string estimator = "v";
  std::size_t perms = 10;
  std::string mode = "difference";
  std::string loss = "squared";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool omit_own_point = false;
  std::string condition;
  std::string condition_grid = "full";
  std::string method;
  std::size_t mfeat = 100;
  std::size_t mobs = 5;
  std::size_t row = 0;
  // Simulations.
  std::string study;
  std::size_t train_n = 2000;
  std::size_t test_n = 100;
  std::size_t reps = 20;
  std::string learner = "forest";
  std::string learners = "knn,forest,linear,linear_interactions";
  double noise_sd = kDefaultNoiseSd;
  // Output.
  std::string out;
  std::string json_out;
  std::string svg;
  std::string matrix_out;
  std::string summary;
  // Plot.
  std::string curves;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool highlight = false;
};

// ---------------------------------------------------------------------------
// Small parsers

std::vector<std::string> SplitOn(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    std::string part(text.substr(start, pos == std::string_view::npos ? text.npos : pos - start));
    const auto b = part.find_first_not_of(" \t");
    const auto e = part.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : part.substr(b, e - b + 1));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> out;
  for (std::string word; in >> word;) out.push_back(word);
  return out;
}

std::size_t ParseSize(std::string_view text, const std::string& what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw UsageError(what + " must be a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

double ParseNumber(std::string_view text, const std::string& what) {
  double value = 0.0;
  if (!ParseFiniteDouble(text, value)) {
    throw UsageError(what + " must be a finite number, got '" + std::string(text) + "'");
  }
  return value;
}

// ---------------------------------------------------------------------------
// Output helpers

void Emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write '" + path + "'");
  file << text;
  if (!file) throw Error("error while writing '" + path + "'");
}

std::string CurvesCsv(const std::vector<Curve>& aggregates, const std::vector<Curve>& individual) {
  std::ostringstream os;
  WriteCsvRow(os, std::vector<std::string>{"curve", "kind", "observation", "grid_value",
                                           "grid_label", "ordinate"});
  auto write = [&](const Curve& c, const char* kind) {
    for (std::size_t k = 0; k < c.size(); ++k) {
      WriteCsvRow(os, std::vector<std::string>{
                          c.label, kind, c.observation ? std::to_string(*c.observation) : "",
                          FormatNumber(c.abscissa[k]),
                          k < c.abscissa_labels.size() ? c.abscissa_labels[k] : "",
                          FormatNumber(c.ordinates[k])});
    }
  };
  for (const Curve& c : aggregates) write(c, "aggregate");
  for (const Curve& c : individual) write(c, "individual");
  return os.str();
}

std::string JoinNames(const Dataset& d, const FeatureSet& s) {
  std::string out;
  for (std::size_t j : s.indices()) out += (out.empty() ? "" : ",") + d.feature_names()[j];
  return out;
}

// ---------------------------------------------------------------------------
// Model and data loading

CsvOptions CsvFor(const Options& o) {
  CsvOptions opts;
  opts.target = o.target;
  if (!o.categorical.empty()) {
    for (auto& name : SplitOn(o.categorical, ',')) {
      if (!name.empty()) opts.categorical.push_back(name);
    }
  }
  return opts;
}

void AddLevels(CsvOptions& opts, const Schema& schema) {
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema.kinds[j].is_categorical()) opts.levels[schema.names[j]] = schema.kinds[j].levels();
  }
}

std::unique_ptr<Predictor> FitFromSpec(const std::string& spec, const Dataset& train,
                                       std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::map<std::string, std::string> params;
  if (colon != std::string::npos) {
    for (const auto& kv : SplitOn(spec.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("fit parameter '" + kv + "' is not key=value");
      params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    std::string v = it->second;
    params.erase(it);
    return v;
  };
  Learner learner;
  try {
    learner = ParseLearner(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  LearnerOptions options;
  if (learner == Learner::kForest) {
    if (auto v = take("ntree")) options.forest.ntree = ParseSize(*v, "ntree");
    if (auto v = take("mtry")) options.forest.mtry = ParseSize(*v, "mtry");
    if (auto v = take("min_node_size")) options.forest.min_node_size = ParseSize(*v, "min_node_size");
    if (auto v = take("bootstrap")) options.forest.bootstrap = ParseSize(*v, "bootstrap") != 0;
  } else if (learner == Learner::kKnn) {
    if (auto v = take("k")) options.knn_k = ParseSize(*v, "k");
  }
  if (!params.empty()) {
    throw UsageError("unknown parameter '" + params.begin()->first + "' for learner " + name);
  }
  return FitLearner(learner, train, seed, options);
}

struct Loaded {
  std::unique_ptr<Predictor> model;
  std::optional<Dataset> data;
};

Loaded LoadModelAndData(const Options& o) {
  const int sources = !o.model.empty() + !o.fit.empty() + !o.external.empty();
  if (sources != 1) {
    throw UsageError("give exactly one model source: --model, --fit or --external");
  }
  if (o.data.empty()) throw UsageError("--data is required");
  Loaded loaded;
  CsvOptions opts = CsvFor(o);
  if (!o.model.empty()) {
    loaded.model = LoadModel(o.model);
    AddLevels(opts, loaded.model->schema());
    loaded.data = ConformToSchema(LoadCsv(o.data, opts), loaded.model->schema());
  } else if (!o.fit.empty()) {
    Dataset train = LoadCsv(o.train.empty() ? o.data : o.train, opts);
    loaded.model = FitFromSpec(o.fit, train, o.seed);
    if (o.train.empty()) {
      loaded.data = std::move(train);
    } else {
      AddLevels(opts, train.schema());
      loaded.data = ConformToSchema(LoadCsv(o.data, opts), train.schema());
    }
  } else {
    loaded.data = LoadCsv(o.data, opts);
    const auto command = SplitWords(o.external);
    loaded.model = SpawnExternal(command, loaded.data->schema());
  }
  return loaded;
}

// ---------------------------------------------------------------------------
// Analysis settings

std::vector<FeatureSet> FeatureGroups(const Options& o, const Dataset& d, bool single) {
  std::vector<FeatureSet> groups;
  for (const auto& text : o.features) groups.push_back(ParseFeatureSet(d.schema(), text));
  if (single) {
    if (groups.size() != 1) throw UsageError("this command needs exactly one --features value");
    return groups;
  }
  if (groups.empty()) {
    for (std::size_t j = 0; j < d.p(); ++j) groups.push_back(FeatureSet({j}));
  }
  return groups;
}

GridSpec BuildGrid(const Options& o, const Dataset& d, const FeatureSet& s) {
  if (!o.grid_values.empty() && o.grid != "auto" && o.grid != "explicit") {
    throw UsageError("--grid-values requires --grid explicit");
  }
  if (!o.grid_values.empty() || o.grid == "explicit") {
    if (o.grid_values.empty()) throw UsageError("--grid explicit requires --grid-values");
    std::vector<std::vector<double>> tuples;
    for (const auto& tuple_text : SplitOn(o.grid_values, ';')) {
      const auto parts = SplitOn(tuple_text, ',');
      if (parts.size() != s.size()) {
        throw UsageError("grid tuple '" + tuple_text + "' needs " + std::to_string(s.size()) +
                         " values");
      }
      std::vector<double> tuple;
      for (std::size_t a = 0; a < parts.size(); ++a) {
        const FeatureKind& kind = d.kind(s.indices()[a]);
        tuple.push_back(kind.is_categorical() ? static_cast<double>(kind.LevelIndex(parts[a]))
                                              : ParseNumber(parts[a], "grid value"));
      }
      tuples.push_back(std::move(tuple));
    }
    return GridSpec::Explicit(std::move(tuples));
  }
  if (o.grid == "all") return GridSpec::AllObserved();
  if (o.grid == "sample") return GridSpec::Sample(o.grid_m, o.seed);
  return GridSpec::Default(d.n(), o.seed);
}

EstimatorKind BuildEstimator(const Options& o) {
  if (o.estimator == "u") return EstimatorKind::UStatistic();
  if (o.estimator == "approx") return EstimatorKind::Approx(o.perms, o.seed);
  return EstimatorKind::VStatistic();
}

std::map<std::string, std::vector<bool>> BuildGroups(const Options& o, const Dataset& d) {
  const auto colon = o.condition.find(':');
  const std::size_t feature = d.FeatureIndex(o.condition.substr(0, colon));
  std::optional<double> threshold;
  if (colon != std::string::npos) {
    threshold = ParseNumber(o.condition.substr(colon + 1), "condition threshold");
  }
  return GroupsByFeature(d, feature, threshold);
}

Curve GroupCurve(const ImportanceMatrix& m, const std::vector<bool>& mask,
                 const std::string& label) {
  Curve curve = PiCurve(m);
  curve.label = label;
  const auto order = m.SortedGridOrder();
  for (std::size_t a = 0; a < order.size(); ++a) {
    RunningMean mean;
    for (std::size_t i = 0; i < m.num_obs(); ++i) {
      if (mask[i]) mean.Add(m.cell(order[a], i));
    }
    curve.ordinates[a] = mean.value();
  }
  return curve;
}

std::vector<double> Column(const Dataset& d, std::size_t j) {
  std::vector<double> out(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) out[i] = d.at(i, j);
  return out;
}

void EmitPlot(const Options& o, PlotSpec spec, std::ostream& out) {
  if (!o.title.empty()) spec.title = o.title;
  if (!o.x_label.empty()) spec.x_label = o.x_label;
  if (!o.y_label.empty()) spec.y_label = o.y_label;
  Emit(o.svg, RenderLinePlot(spec), out);
}

// ---------------------------------------------------------------------------
// Commands. Each returns the one-line summary.

struct Context {
  const Options& o;
  json config;
  std::ostream& out;
};

void EmitJson(Context& ctx, json results) {
  if (ctx.o.json_out.empty()) return;
  json doc = {{"config", ctx.config}, {"results", std::move(results)}};
  Emit(ctx.o.json_out, doc.dump(2) + "\n", ctx.out);
}

std::string CmdFit(Context& ctx) {
  const Options& o = ctx.o;
  if (o.fit.empty()) throw UsageError("fit needs --fit SPEC");
  if (o.out.empty() || o.out == "-") throw UsageError("fit needs --out PATH for the model file");
  const Dataset train = LoadCsv(o.data, CsvFor(o));
  const auto model = FitFromSpec(o.fit, train, o.seed);
  SaveModel(*model, o.out);
  const LossFn loss = LossFn::Parse(o.loss);
  return "fit: " + model->Describe() + " on " + std::to_string(train.n()) + " rows, training " +
         loss.name() + " loss " + FormatShort(EmpiricalGe(*model, train, loss));
}

std::string CmdPfi(Context& ctx) {
  const Options& o = ctx.o;
  Loaded l = LoadModelAndData(o);
  const Dataset& d = *l.data;
  const LossFn loss = LossFn::Parse(o.loss);
  const PfiMode mode = o.mode == "ratio" ? PfiMode::kRatio : PfiMode::kDifference;
  std::ostringstream csv;
  json results = json::array();
  std::string first;

  if (!o.condition.empty()) {
    if (mode != PfiMode::kDifference) throw UsageError("conditional PFI is a difference measure");
    const auto groups = BuildGroups(o, d);
    WriteCsvRow(csv, std::vector<std::string>{"features", "group", "conditional_pfi"});
    for (const FeatureSet& s : FeatureGroups(o, d, false)) {
      const auto values =
          o.condition_grid == "subset"
              ? ConditionalPfiSubsetGrid(*l.model, d, s, loss, groups)
              : ConditionalPfi(DeltaLossMatrix(*l.model, d, s, BuildGrid(o, d, s), loss), groups);
      for (const auto& [label, value] : values) {
        WriteCsvRow(csv, std::vector<std::string>{JoinNames(d, s), label, FormatNumber(value)});
        results.push_back({{"features", JoinNames(d, s)}, {"group", label}, {"value", value}});
        if (first.empty()) first = JoinNames(d, s) + " | " + label + " = " + FormatShort(value);
      }
    }
  } else {
    const EstimatorKind estimator = BuildEstimator(o);
    WriteCsvRow(csv, std::vector<std::string>{"features", "mode", "estimator", "value",
                                              "baseline_ge", "replaced_ge"});
    for (const FeatureSet& s : FeatureGroups(o, d, false)) {
      const ImportanceResult r = Pfi(*l.model, d, s, loss, mode, estimator);
      WriteCsvRow(csv, std::vector<std::string>{JoinNames(d, s), o.mode, estimator.Describe(),
                                                FormatNumber(r.value), FormatNumber(r.baseline_ge),
                                                FormatNumber(r.replaced_ge)});
      results.push_back({{"features", JoinNames(d, s)},
                         {"mode", o.mode},
                         {"estimator", estimator.Describe()},
                         {"value", r.value},
                         {"baseline_ge", r.baseline_ge},
                         {"replaced_ge", r.replaced_ge}});
      if (first.empty()) first = JoinNames(d, s) + " = " + FormatShort(r.value);
    }
  }
  const std::size_t rows = results.size();
  Emit(o.out, csv.str(), ctx.out);
  EmitJson(ctx, std::move(results));
  return "pfi (" + o.mode + ", " + loss.name() + "): " + first + " [" + std::to_string(rows) +
         " rows]";
}

std::string CmdIciOrPi(Context& ctx, bool ici) {
  const Options& o = ctx.o;
  Loaded l = LoadModelAndData(o);
  const Dataset& d = *l.data;
  const LossFn loss = LossFn::Parse(o.loss);
  const FeatureSet s = FeatureGroups(o, d, true).front();
  const ImportanceMatrix m = DeltaLossMatrix(*l.model, d, s, BuildGrid(o, d, s), loss);

  std::vector<Curve> aggregates{PiCurve(m)};
  std::vector<Curve> individual;
  if (ici) individual = IciCurves(m, o.omit_own_point);
  if (!o.condition.empty()) {
    for (const auto& [label, mask] : BuildGroups(o, d)) {
      aggregates.push_back(GroupCurve(m, mask, "PI " + m.feature_label() + " | " + label));
    }
  }
  Emit(o.out, CurvesCsv(aggregates, individual), ctx.out);
  if (!o.matrix_out.empty()) {
    std::ostringstream os;
    WriteImportanceMatrixCsv(m, d, os);
    Emit(o.matrix_out, os.str(), ctx.out);
  }
  if (!o.svg.empty()) {
    PlotSpec spec;
    spec.curves = individual;
    spec.aggregates = aggregates;
    spec.title = (ici ? "ICI and PI: " : "PI: ") + m.feature_label();
    spec.x_label = d.feature_names()[s.front()];
    spec.y_label = "loss change";
    spec.highlight_extremes = ici;
    spec.histogram = Column(d, s.front());
    EmitPlot(o, std::move(spec), ctx.out);
  }
  const double pfi = Mean(m.observation_means());
  EmitJson(ctx, {{"features", m.feature_label()}, {"pfi", pfi}, {"grid_points", m.num_grid()}});
  return std::string(ici ? "ici" : "pi") + ": " + m.feature_label() + " over " +
         std::to_string(m.num_grid()) + " grid points, " + std::to_string(m.num_obs()) +
         " observations, PFI " + FormatShort(pfi);
}

std::string CmdPdpOrIce(Context& ctx, bool ice) {
  const Options& o = ctx.o;
  Loaded l = LoadModelAndData(o);
  const Dataset& d = *l.data;
  const FeatureSet s = FeatureGroups(o, d, true).front();
  const GridSpec grid = BuildGrid(o, d, s);
  std::vector<Curve> aggregates, individual;
  if (ice) {
    EffectAndImportanceCurves curves = PdAndPiCurves(*l.model, d, LossFn::Parse(o.loss), s, grid);
    aggregates.push_back(std::move(curves.pd));
    individual = std::move(curves.ice);
  } else {
    aggregates.push_back(PdFunction(*l.model, d, s, grid));
  }
  Emit(o.out, CurvesCsv(aggregates, individual), ctx.out);
  if (!o.svg.empty()) {
    PlotSpec spec;
    spec.curves = individual;
    spec.aggregates = aggregates;
    spec.title = (ice ? "ICE and PD: " : "PD: ") + JoinNames(d, s);
    spec.x_label = d.feature_names()[s.front()];
    spec.y_label = "prediction";
    spec.histogram = Column(d, s.front());
    EmitPlot(o, std::move(spec), ctx.out);
  }
  const Curve& pd = aggregates.front();
  const auto [lo, hi] = std::minmax_element(pd.ordinates.begin(), pd.ordinates.end());
  EmitJson(ctx, {{"features", JoinNames(d, s)}, {"grid_points", pd.size()}});
  return std::string(ice ? "ice" : "pdp") + ": " + JoinNames(d, s) + " over " +
         std::to_string(pd.size()) + " grid points, PD range [" + FormatShort(*lo) + ", " +
         FormatShort(*hi) + "]";
}

std::string CmdShapley(Context& ctx) {
  const Options& o = ctx.o;
  Loaded l = LoadModelAndData(o);
  const Dataset& d = *l.data;
  ShapleyConfig config;
  config.mode = o.method == "exact" ? ShapleyConfig::Mode::kExact : ShapleyConfig::Mode::kApprox;
  config.m_feat = o.mfeat;
  config.m_obs = o.mobs;
  config.seed = o.seed;
  const ShapleyResult r = ComputeShapley(*l.model, d, LossFn::Parse(o.loss), config);

  std::ostringstream csv;
  WriteCsvRow(csv, std::vector<std::string>{"feature", "phi", "standard_error", "proportion"});
  json results = json::array();
  double sum = 0.0;
  for (std::size_t j = 0; j < r.phi.size(); ++j) {
    sum += r.phi[j];
    const std::string se = r.standard_errors.empty() ? "" : FormatNumber(r.standard_errors[j]);
    const std::string prop = r.proportions.empty() ? "" : FormatNumber(r.proportions[j]);
    WriteCsvRow(csv, std::vector<std::string>{r.feature_names[j], FormatNumber(r.phi[j]), se, prop});
    json entry = {{"feature", r.feature_names[j]}, {"phi", r.phi[j]}};
    if (!r.standard_errors.empty()) entry["standard_error"] = r.standard_errors[j];
    if (!r.proportions.empty()) entry["proportion"] = r.proportions[j];
    results.push_back(std::move(entry));
  }
  Emit(o.out, csv.str(), ctx.out);
  ctx.config["shapley"] = config.Describe();
  EmitJson(ctx, {{"features", std::move(results)}, {"total", r.total}});
  return "shapley (" + config.Describe() + "): sum(phi) " + FormatShort(sum) + ", v(P) " +
         FormatShort(r.total);
}

std::string CmdShapleyEffect(Context& ctx) {
  const Options& o = ctx.o;
  Loaded l = LoadModelAndData(o);
  const Dataset& d = *l.data;
  if (o.row >= d.n()) {
    throw UsageError("--row " + std::to_string(o.row) + " is out of range (n = " +
                     std::to_string(d.n()) + ")");
  }
  const EffectShapleyMode mode = o.method == "sampled"
                                     ? EffectShapleyMode::Sampled(o.perms, o.seed)
                                     : EffectShapleyMode::Exact();
  const EffectShapley r = ShapleyEffect(*l.model, d, d.x().row(o.row), mode);

  std::ostringstream csv;
  WriteCsvRow(csv, std::vector<std::string>{"feature", "value", "phi", "standard_error"});
  json results = json::array();
  for (std::size_t j = 0; j < d.p(); ++j) {
    const FeatureKind& kind = d.kind(j);
    const std::string value = kind.is_categorical()
                                  ? kind.levels()[static_cast<std::size_t>(r.observation[j])]
                                  : FormatNumber(r.observation[j]);
    const std::string se = r.standard_errors.empty() ? "" : FormatNumber(r.standard_errors[j]);
    WriteCsvRow(csv, std::vector<std::string>{d.feature_names()[j], value, FormatNumber(r.phi[j]), se});
    results.push_back({{"feature", d.feature_names()[j]}, {"value", value}, {"phi", r.phi[j]}});
  }
  Emit(o.out, csv.str(), ctx.out);
  EmitJson(ctx, {{"row", o.row},
                 {"prediction", r.prediction},
                 {"baseline", r.baseline},
                 {"features", std::move(results)}});
  double sum = 0.0;
  for (double v : r.phi) sum += v;
  return "shapley-effect: row " + std::to_string(o.row) + " prediction " +
         FormatShort(r.prediction) + ", mean prediction " + FormatShort(r.baseline) +
         ", sum(phi) " + FormatShort(sum);
}

std::string CmdSimulate(Context& ctx) {
  const Options& o = ctx.o;
  LearnerOptions learner_options;
  std::ostringstream csv;
  std::string text;
  std::string line;
  if (o.study == "sim1") {
    Sim1Options s;
    s.train_n = o.train_n;
    s.test_n = o.test_n;
    s.reps = o.reps;
    s.seed = o.seed;
    s.learner = ParseLearner(o.learner);
    s.noise_sd = o.noise_sd;
    const Sim1Report report = RunSim1(s);
    WriteSim1Csv(report, csv);
    text = Sim1Summary(report);
    if (!o.svg.empty()) {
      PlotSpec spec;
      spec.aggregates = report.pi_curves;
      spec.title = "conditional PI curves, first repetition";
      spec.x_label = "feature value";
      spec.y_label = "loss change";
      EmitPlot(o, std::move(spec), ctx.out);
    }
    line = "simulate sim1: PFI(X1) " + FormatShort(Mean(report.pfi_x1)) + ", PFI(X2) " +
           FormatShort(Mean(report.pfi_x2)) + " over " + std::to_string(o.reps) + " reps";
  } else {
    Sim2Options s;
    s.train_n = o.train_n;
    s.test_n = o.test_n;
    s.reps = o.reps;
    s.seed = o.seed;
    s.learners.clear();
    for (const auto& name : SplitOn(o.learners, ',')) s.learners.push_back(ParseLearner(name));
    s.m_feat = o.mfeat;
    s.m_obs = o.mobs;
    s.noise_sd = o.noise_sd;
    const Sim2Report report = RunSim2(s);
    WriteSim2Csv(report, csv);
    text = Sim2Summary(report);
    line = "simulate sim2: " + std::to_string(report.models.size()) + " models over " +
           std::to_string(o.reps) + " reps";
  }
  Emit(o.out, csv.str(), ctx.out);
  if (o.summary.empty()) {
    line += "\n" + text;
  } else {
    Emit(o.summary, text, ctx.out);
  }
  return line;
}

std::string CmdPlot(Context& ctx) {
  const Options& o = ctx.o;
  if (o.curves.empty()) throw UsageError("plot needs --curves PATH");
  std::ifstream in(o.curves, std::ios::binary);
  if (!in) throw Error("cannot open '" + o.curves + "'");
  const auto records = ReadCsvRecords(in);
  if (records.empty()) throw Error(o.curves + ": empty file");
  const auto& header = records.front().fields;
  auto col = [&](const char* name, bool required) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw Error(o.curves + ": missing column '" + name + "'");
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_curve = *col("curve", true);
  const std::size_t c_x = *col("grid_value", true);
  const std::size_t c_y = *col("ordinate", true);
  const auto c_kind = col("kind", false);
  const auto c_label = col("grid_label", false);
  const auto c_obs = col("observation", false);

  std::vector<Curve> curves;
  std::vector<bool> aggregate;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != header.size()) {
      throw Error(o.curves + ": line " + std::to_string(records[r].line) + " has " +
                  std::to_string(f.size()) + " fields, header has " +
                  std::to_string(header.size()));
    }
    auto [it, fresh] = index.emplace(f[c_curve], curves.size());
    if (fresh) {
      curves.push_back(Curve{});
      curves.back().label = f[c_curve];
      aggregate.push_back(c_kind && f[*c_kind] == "aggregate");
      if (c_obs && !f[*c_obs].empty()) curves.back().observation = ParseSize(f[*c_obs], "observation");
    }
    Curve& c = curves[it->second];
    double x = 0.0, y = 0.0;
    if (!ParseFiniteDouble(f[c_x], x) || !ParseFiniteDouble(f[c_y], y)) {
      throw Error(o.curves + ": line " + std::to_string(records[r].line) + " has a non-numeric value");
    }
    c.abscissa.push_back(x);
    c.ordinates.push_back(y);
    if (c_label && !f[*c_label].empty()) c.abscissa_labels.push_back(f[*c_label]);
  }
  PlotSpec spec;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    (aggregate[c] ? spec.aggregates : spec.curves).push_back(std::move(curves[c]));
  }
  spec.highlight_extremes = o.highlight;
  if (!o.data.empty()) {
    const Dataset d = LoadCsv(o.data, CsvFor(o));
    spec.histogram = Column(d, FeatureGroups(o, d, true).front().front());
  }
  Options with_svg = o;
  if (with_svg.svg.empty()) with_svg.svg = o.out;
  const std::size_t count = spec.curves.size() + spec.aggregates.size();
  EmitPlot(with_svg, std::move(spec), ctx.out);
  return "plot: " + std::to_string(count) + " curves";
}

// ---------------------------------------------------------------------------
// Option wiring

void AddDataOptions(CLI::App* sub, Options& o, bool required) {
  auto* data = sub->add_option("--data", o.data, "CSV file with a header row");
  if (required) data->required();
  sub->add_option("--target", o.target, "target column name")->capture_default_str();
  sub->add_option("--categorical", o.categorical, "comma-separated columns to read as categorical");
}

void AddModelOptions(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "saved model file");
  sub->add_option("--fit", o.fit,
                  "fit a model first: linear, linear_interactions, forest[:ntree=..,mtry=..,"
                  "min_node_size=..,bootstrap=0|1] or knn[:k=..]");
  sub->add_option("--train", o.train, "training CSV for --fit (default: --data)");
  sub->add_option("--external", o.external,
                  "command of an external predictor speaking the JSON line protocol");
}

void AddCommon(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "random seed (drawn and echoed when absent)");
  sub->add_option("--threads", o.threads, "worker threads (default: BBFI_THREADS or all cores)");
  sub->add_option("--loss", o.loss, "pointwise loss")
      ->check(CLI::IsMember({"squared", "absolute", "zero_one"}))
      ->capture_default_str();
  sub->add_option("--out", o.out, "output path (default: standard output)");
  sub->add_option("--json", o.json_out, "also write a JSON result with the configuration");
}

void AddFeatureOptions(CLI::App* sub, Options& o) {
  sub->add_option("--features", o.features,
                  "feature set S, comma-separated for a joint set; repeat for several sets");
}

void AddGridOptions(CLI::App* sub, Options& o) {
  sub->add_option("--grid", o.grid, "grid strategy")
      ->check(CLI::IsMember({"auto", "all", "sample", "explicit"}))
      ->capture_default_str();
  sub->add_option("--grid-m", o.grid_m, "grid size for --grid sample")->capture_default_str();
  sub->add_option("--grid-values", o.grid_values,
                  "explicit grid: tuples separated by ';', values within a tuple by ','");
}

void AddPlotOptions(CLI::App* sub, Options& o) {
  sub->add_option("--svg", o.svg, "write an SVG plot");
  sub->add_option("--title", o.title, "plot title");
  sub->add_option("--x-label", o.x_label, "plot x-axis label");
  sub->add_option("--y-label", o.y_label, "plot y-axis label");
}

// "--name value..." for every option given on the command line, in
// declaration order, plus the JSON form without output paths and threads.
std::pair<std::string, json> EchoConfig(const CLI::App* sub, const Options& o, bool seed_drawn,
                                        bool has_seed) {
  static const std::vector<std::string> kNotInJson = {"threads", "out",  "json", "svg",
                                                      "matrix-out", "summary"};
  std::string line = "bbfi " + sub->get_name();
  json config = {{"command", sub->get_name()}};
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "threads") continue;
    const auto& results = opt->results();
    if (!opt->nonpositional()) {
      for (const auto& r : results) line += " " + r;
      config[name] = results.size() == 1 ? json(results.front()) : json(results);
      continue;
    }
    if (opt->get_expected_min() == 0) {
      line += " --" + name;
      config[name] = true;
      continue;
    }
    for (const auto& r : results) line += " --" + name + " " + (r.find(' ') == std::string::npos ? r : "'" + r + "'");
    if (std::find(kNotInJson.begin(), kNotInJson.end(), name) == kNotInJson.end()) {
      config[name] = results.size() == 1 ? json(results.front()) : json(results);
    }
  }
  if (has_seed && seed_drawn) {
    line += " --seed " + std::to_string(o.seed);
    config["seed"] = std::to_string(o.seed);
  }
  line += " --threads " + std::to_string(MaxThreads());
  return {line, config};
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"bbfi: model-agnostic feature importance (PFI, ICI/PI, PD/ICE, Shapley)", "bbfi"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "fit a built-in model and save it");
  AddDataOptions(fit, o, true);
  fit->add_option("--fit", o.fit, "learner spec (see pfi --help)")->required();
  AddCommon(fit, o);

  auto* pfi = app.add_subcommand("pfi", "permutation feature importance");
  AddDataOptions(pfi, o, true);
  AddModelOptions(pfi, o);
  AddFeatureOptions(pfi, o);
  AddGridOptions(pfi, o);
  pfi->add_option("--estimator", o.estimator, "v (V-statistic), u (U-statistic) or approx")
      ->check(CLI::IsMember({"v", "u", "approx"}))
      ->capture_default_str();
  pfi->add_option("--perms", o.perms, "observation permutations for --estimator approx")
      ->capture_default_str();
  pfi->add_option("--mode", o.mode, "difference or ratio")
      ->check(CLI::IsMember({"difference", "ratio"}))
      ->capture_default_str();
  pfi->add_option("--condition", o.condition,
                  "conditional PFI by groups of a feature: NAME, or NAME:THRESHOLD for numeric");
  pfi->add_option("--condition-grid", o.condition_grid, "full or subset")
      ->check(CLI::IsMember({"full", "subset"}))
      ->capture_default_str();
  AddCommon(pfi, o);

  CLI::App* curve_cmds[2];
  for (int c = 0; c < 2; ++c) {
    auto* sub = app.add_subcommand(c == 0 ? "ici" : "pi",
                                   c == 0 ? "individual conditional importance curves"
                                          : "partial importance curve");
    AddDataOptions(sub, o, true);
    AddModelOptions(sub, o);
    AddFeatureOptions(sub, o);
    AddGridOptions(sub, o);
    if (c == 0) sub->add_flag("--omit-own-point", o.omit_own_point, "drop each curve's own row");
    sub->add_option("--condition", o.condition, "add PI curves per group: NAME or NAME:THRESHOLD");
    sub->add_option("--matrix-out", o.matrix_out, "write the loss-change matrix as long CSV");
    AddPlotOptions(sub, o);
    AddCommon(sub, o);
    curve_cmds[c] = sub;
  }

  CLI::App* effect_cmds[2];
  for (int c = 0; c < 2; ++c) {
    auto* sub = app.add_subcommand(c == 0 ? "pdp" : "ice",
                                   c == 0 ? "partial dependence curve"
                                          : "individual conditional expectation curves");
    AddDataOptions(sub, o, true);
    AddModelOptions(sub, o);
    AddFeatureOptions(sub, o);
    AddGridOptions(sub, o);
    AddPlotOptions(sub, o);
    AddCommon(sub, o);
    effect_cmds[c] = sub;
  }

  auto* shapley = app.add_subcommand("shapley", "Shapley feature importance (SFIMP)");
  AddDataOptions(shapley, o, true);
  AddModelOptions(shapley, o);
  shapley->add_option("--method", o.method, "exact or approx (default approx)")
      ->check(CLI::IsMember({"exact", "approx"}));
  shapley->add_option("--mfeat", o.mfeat, "feature permutations per feature")->capture_default_str();
  shapley->add_option("--mobs", o.mobs, "observation permutations per evaluation")
      ->capture_default_str();
  AddCommon(shapley, o);

  auto* effect = app.add_subcommand("shapley-effect", "Shapley attribution of one prediction");
  AddDataOptions(effect, o, true);
  AddModelOptions(effect, o);
  effect->add_option("--row", o.row, "0-based data row to explain")->required();
  effect->add_option("--method", o.method, "exact or sampled (default exact)")
      ->check(CLI::IsMember({"exact", "sampled"}));
  effect->add_option("--perms", o.perms, "feature permutations for --method sampled")
      ->capture_default_str();
  AddCommon(effect, o);

  auto* simulate = app.add_subcommand("simulate", "run a simulation study");
  simulate->add_option("study", o.study, "sim1 or sim2")
      ->required()
      ->check(CLI::IsMember({"sim1", "sim2"}));
  simulate->add_option("--train-n", o.train_n, "training rows")->capture_default_str();
  simulate->add_option("--test-n", o.test_n, "test rows per repetition")->capture_default_str();
  simulate->add_option("--reps", o.reps, "repetitions")->capture_default_str();
  simulate->add_option("--learner", o.learner, "sim1 model")->capture_default_str();
  simulate->add_option("--learners", o.learners, "sim2 models, comma-separated")
      ->capture_default_str();
  simulate->add_option("--mfeat", o.mfeat, "sim2 feature permutations")->capture_default_str();
  simulate->add_option("--mobs", o.mobs, "sim2 observation permutations")->capture_default_str();
  simulate->add_option("--noise-sd", o.noise_sd, "noise standard deviation")->capture_default_str();
  simulate->add_option("--summary", o.summary, "write the text summary here instead of stderr");
  simulate->add_option("--svg", o.svg, "sim1: plot the conditional PI curves");
  AddCommon(simulate, o);

  auto* plot = app.add_subcommand("plot", "render an SVG from an exported curve CSV");
  plot->add_option("--curves", o.curves, "curve CSV written by ici, pi, pdp or ice")->required();
  AddDataOptions(plot, o, false);
  AddFeatureOptions(plot, o);
  plot->add_flag("--highlight", o.highlight, "colour the curves with extreme integrals");
  AddPlotOptions(plot, o);
  AddCommon(plot, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  SetMaxThreads(sub->count("--threads") ? std::max<std::size_t>(1, o.threads) : 0);
  const bool has_seed = sub != plot;
  const bool seed_drawn = has_seed && sub->count("--seed") == 0;
  if (seed_drawn) {
    std::random_device device;
    o.seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  }
  auto [echo, config] = EchoConfig(sub, o, seed_drawn, has_seed);
  err << "config: " << echo << "\n";

  Context ctx{o, std::move(config), out};
  try {
    std::string summary;
    if (sub == fit) summary = CmdFit(ctx);
    else if (sub == pfi) summary = CmdPfi(ctx);
    else if (sub == curve_cmds[0]) summary = CmdIciOrPi(ctx, true);
    else if (sub == curve_cmds[1]) summary = CmdIciOrPi(ctx, false);
    else if (sub == effect_cmds[0]) summary = CmdPdpOrIce(ctx, false);
    else if (sub == effect_cmds[1]) summary = CmdPdpOrIce(ctx, true);
    else if (sub == shapley) summary = CmdShapley(ctx);
    else if (sub == effect) summary = CmdShapleyEffect(ctx);
    else if (sub == simulate) summary = CmdSimulate(ctx);
    else summary = CmdPlot(ctx);
    err << summary << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace bbfi::cli
