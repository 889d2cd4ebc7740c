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

#include "bbfi/models.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <queue>
#include <sstream>

#include "bbfi/error.h"
#include "bbfi/numeric.h"
#include "bbfi/table_io.h"
#include "json.hpp"

namespace bbfi {

using nlohmann::json;

void Predictor::CheckWidth(const Matrix& rows) const {
  if (rows.cols() != num_features()) {
    throw Error(kind() + " model expects " + std::to_string(num_features()) +
                " features, got " + std::to_string(rows.cols()));
  }
}

void CheckSchemaMatches(const Predictor& model, const Dataset& d) {
  if (model.schema() == d.schema()) return;
  auto join = [](const std::vector<std::string>& names) {
    std::string out;
    for (const auto& name : names) out += (out.empty() ? "" : ",") + name;
    return out;
  };
  if (model.schema().names != d.feature_names()) {
    throw Error("model features (" + join(model.schema().names) +
                ") do not match data features (" + join(d.feature_names()) + ")");
  }
  throw Error("model feature kinds or levels do not match the data");
}

std::vector<double> FunctionPredictor::Predict(const Matrix& rows) const {
  CheckWidth(rows);
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = fn_(rows.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// Linear model

double LinearTerm::Evaluate(std::span<const double> row) const {
  switch (type) {
    case Type::kNumeric:
      return row[feature];
    case Type::kIndicator:
      return row[feature] == static_cast<double>(other) ? 1.0 : 0.0;
    case Type::kProduct:
      return row[feature] * row[other];
  }
  return 0.0;
}

std::string LinearTerm::Name(const Schema& schema) const {
  switch (type) {
    case Type::kNumeric:
      return schema.names[feature];
    case Type::kIndicator:
      return schema.names[feature] + "=" + schema.kinds[feature].levels()[other];
    case Type::kProduct:
      return schema.names[feature] + ":" + schema.names[other];
  }
  return "";
}

std::vector<LinearTerm> ExpandLinearTerms(const Schema& schema, bool interactions) {
  std::vector<LinearTerm> terms;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema.kinds[j].is_numeric()) {
      terms.push_back({LinearTerm::Type::kNumeric, j, 0});
    } else {
      for (std::size_t l = 1; l < schema.kinds[j].num_levels(); ++l) {
        terms.push_back({LinearTerm::Type::kIndicator, j, l});
      }
    }
  }
  if (interactions) {
    for (std::size_t a = 0; a < schema.size(); ++a) {
      if (!schema.kinds[a].is_numeric()) continue;
      for (std::size_t b = a + 1; b < schema.size(); ++b) {
        if (schema.kinds[b].is_numeric()) terms.push_back({LinearTerm::Type::kProduct, a, b});
      }
    }
  }
  return terms;
}

LinearModel::LinearModel(Schema schema, bool interactions, double intercept,
                         std::vector<double> coefficients)
    : Predictor(std::move(schema)),
      interactions_(interactions),
      intercept_(intercept),
      terms_(ExpandLinearTerms(this->schema(), interactions)),
      coefficients_(std::move(coefficients)) {
  if (terms_.size() != coefficients_.size()) {
    throw Error("linear model has " + std::to_string(terms_.size()) + " terms but " +
                std::to_string(coefficients_.size()) + " coefficients");
  }
  if (!std::isfinite(intercept_) ||
      !std::all_of(coefficients_.begin(), coefficients_.end(),
                   [](double c) { return std::isfinite(c); })) {
    throw Error("linear model with non-finite coefficients");
  }
}

std::vector<double> LinearModel::Predict(const Matrix& rows) const {
  CheckWidth(rows);
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    double value = intercept_;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
      value += coefficients_[t] * terms_[t].Evaluate(row);
    }
    out[r] = value;
  }
  return out;
}

std::string LinearModel::Describe() const {
  return std::string("linear(interactions=") + (interactions_ ? "true" : "false") + ")";
}

double LinearModel::Coefficient(std::string_view term_name) const {
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (terms_[t].Name(schema()) == term_name) return coefficients_[t];
  }
  throw Error("linear model has no term '" + std::string(term_name) + "'");
}

LinearModel FitLinear(const Dataset& train, bool interactions) {
  const std::vector<LinearTerm> terms = ExpandLinearTerms(train.schema(), interactions);
  const auto n = static_cast<Eigen::Index>(train.n());
  const auto cols = static_cast<Eigen::Index>(terms.size() + 1);

  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = train.x().row(static_cast<std::size_t>(i));
    design(i, 0) = 1.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      design(i, static_cast<Eigen::Index>(t + 1)) = terms[t].Evaluate(row);
    }
    target(i) = train.y()[static_cast<std::size_t>(i)];
  }

  // Unit-norm columns make the rank threshold scale free.
  Eigen::VectorXd norms = design.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (norms(c) == 0.0) norms(c) = 1.0;
    design.col(c) /= norms(c);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < cols; ++k) {
      const Eigen::Index c = perm(k);
      if (!names.empty()) names += ", ";
      names += c == 0 ? std::string("(intercept)")
                      : terms[static_cast<std::size_t>(c - 1)].Name(train.schema());
    }
    throw Error("design matrix is rank deficient (" + std::to_string(qr.rank()) + " of " +
                std::to_string(cols) + " columns independent); collinear terms: " + names);
  }
  Eigen::VectorXd beta = qr.solve(target);
  for (Eigen::Index c = 0; c < cols; ++c) beta(c) /= norms(c);

  std::vector<double> coefficients(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    coefficients[t] = beta(static_cast<Eigen::Index>(t + 1));
  }
  return LinearModel(train.schema(), interactions, beta(0), std::move(coefficients));
}

// ---------------------------------------------------------------------------
// k-nearest neighbours

// k-d tree over the standardised numeric columns. Categorical columns only
// enter the exact distance; their lower bound in pruning is zero.
struct KnnModel::Index {
  struct Node {
    bool leaf = true;
    std::size_t dim = 0;
    double split = 0.0;
    std::size_t left = 0, right = 0;
    std::size_t begin = 0, end = 0;
  };

  Matrix z;  // standardised training rows
  std::vector<bool> categorical;
  std::vector<std::size_t> numeric_dims;
  std::vector<std::size_t> order;
  std::vector<Node> nodes;

  static constexpr std::size_t kBucket = 16;

  std::size_t BuildNode(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes.size();
    nodes.push_back(Node{});
    nodes[id].begin = begin;
    nodes[id].end = end;
    if (end - begin <= kBucket || numeric_dims.empty()) return id;

    std::size_t best_dim = numeric_dims.front();
    double best_spread = -1.0;
    for (std::size_t dim : numeric_dims) {
      double lo = z(order[begin], dim), hi = lo;
      for (std::size_t r = begin; r < end; ++r) {
        lo = std::min(lo, z(order[r], dim));
        hi = std::max(hi, z(order[r], dim));
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = dim;
      }
    }
    if (best_spread <= 0.0) return id;

    const std::size_t mid = begin + (end - begin) / 2;
    auto first = order.begin() + static_cast<std::ptrdiff_t>(begin);
    std::nth_element(first, order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       const double za = z(a, best_dim), zb = z(b, best_dim);
                       return za < zb || (za == zb && a < b);
                     });
    const double split = z(order[mid], best_dim);
    // Left holds values < split, right values >= split.
    auto part = std::partition(first, order.begin() + static_cast<std::ptrdiff_t>(end),
                               [&](std::size_t r) { return z(r, best_dim) < split; });
    std::size_t cut = static_cast<std::size_t>(part - order.begin());
    if (cut == begin) return id;
    const std::size_t left = BuildNode(begin, cut);
    const std::size_t right = BuildNode(cut, end);
    Node& node = nodes[id];
    node.leaf = false;
    node.dim = best_dim;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  double Distance(std::span<const double> q, std::size_t r) const {
    double dist = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (categorical[j]) {
        dist += q[j] == z(r, j) ? 0.0 : 1.0;
      } else {
        const double diff = q[j] - z(r, j);
        dist += diff * diff;
      }
    }
    return dist;
  }

  using Entry = std::pair<double, std::size_t>;  // (distance, row), max-heap

  void Search(std::size_t id, std::span<const double> q, std::size_t k,
              std::priority_queue<Entry>& heap) const {
    const Node& node = nodes[id];
    if (node.leaf) {
      for (std::size_t r = node.begin; r < node.end; ++r) {
        const Entry entry{Distance(q, order[r]), order[r]};
        if (heap.size() < k) {
          heap.push(entry);
        } else if (entry < heap.top()) {
          heap.pop();
          heap.push(entry);
        }
      }
      return;
    }
    const double diff = q[node.dim] - node.split;
    const std::size_t near = diff < 0.0 ? node.left : node.right;
    const std::size_t far = diff < 0.0 ? node.right : node.left;
    Search(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.top().first) Search(far, q, k, heap);
  }
};

KnnModel::KnnModel(Schema schema, std::size_t k, Matrix train_x,
                   std::vector<double> train_y, std::vector<double> center,
                   std::vector<double> scale)
    : Predictor(std::move(schema)),
      k_(k),
      train_x_(std::move(train_x)),
      train_y_(std::move(train_y)),
      center_(std::move(center)),
      scale_(std::move(scale)),
      index_(std::make_unique<Index>()) {
  const std::size_t p = num_features();
  if (train_x_.rows() == 0 || train_x_.cols() != p || train_y_.size() != train_x_.rows()) {
    throw Error("k-NN training data does not match the schema");
  }
  if (center_.size() != p || scale_.size() != p) {
    throw Error("k-NN standardisation constants do not match the schema");
  }
  if (k_ < 1 || k_ > train_x_.rows()) {
    throw Error("k must lie in [1, " + std::to_string(train_x_.rows()) + "], got " +
                std::to_string(k_));
  }
  for (double s : scale_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error("k-NN scale must be positive");
  }
  Index& index = *index_;
  index.z = Matrix(train_x_.rows(), p);
  index.categorical.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    index.categorical[j] = this->schema().kinds[j].is_categorical();
    if (!index.categorical[j]) index.numeric_dims.push_back(j);
  }
  for (std::size_t r = 0; r < train_x_.rows(); ++r) {
    for (std::size_t j = 0; j < p; ++j) {
      index.z(r, j) = index.categorical[j] ? train_x_(r, j)
                                           : (train_x_(r, j) - center_[j]) / scale_[j];
    }
  }
  index.order.resize(train_x_.rows());
  std::iota(index.order.begin(), index.order.end(), std::size_t{0});
  index.BuildNode(0, train_x_.rows());
}

KnnModel::~KnnModel() = default;
KnnModel::KnnModel(KnnModel&&) noexcept = default;

std::vector<std::size_t> KnnModel::Neighbors(std::span<const double> row) const {
  std::vector<double> q(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    q[j] = index_->categorical[j] ? row[j] : (row[j] - center_[j]) / scale_[j];
  }
  std::priority_queue<Index::Entry> heap;
  index_->Search(0, q, k_, heap);
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i > 0; --i) {
    out[i - 1] = heap.top().second;
    heap.pop();
  }
  return out;
}

std::vector<double> KnnModel::Predict(const Matrix& rows) const {
  CheckWidth(rows);
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    RunningMean mean;
    for (std::size_t idx : Neighbors(rows.row(r))) mean.Add(train_y_[idx]);
    out[r] = mean.value();
  }
  return out;
}

std::string KnnModel::Describe() const { return "knn(k=" + std::to_string(k_) + ")"; }

KnnModel FitKnn(const Dataset& train, std::size_t k) {
  if (k < 1 || k > train.n()) {
    throw Error("k must lie in [1, " + std::to_string(train.n()) + "], got " +
                std::to_string(k));
  }
  std::vector<double> center(train.p(), 0.0), scale(train.p(), 1.0);
  for (std::size_t j = 0; j < train.p(); ++j) {
    if (train.kind(j).is_categorical()) continue;
    std::vector<double> column(train.n());
    for (std::size_t i = 0; i < train.n(); ++i) column[i] = train.at(i, j);
    center[j] = Mean(column);
    const double sd = StandardDeviation(column);
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return KnnModel(train.schema(), k, train.x(), train.y(), std::move(center),
                  std::move(scale));
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json SchemaToJson(const Schema& schema) {
  json features = json::array();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    json f = {{"name", schema.names[j]}};
    if (schema.kinds[j].is_categorical()) {
      f["kind"] = "categorical";
      f["levels"] = schema.kinds[j].levels();
    } else {
      f["kind"] = "numeric";
    }
    features.push_back(std::move(f));
  }
  return features;
}

Schema SchemaFromJson(const json& features) {
  Schema schema;
  for (const auto& f : features) {
    schema.names.push_back(f.at("name").get<std::string>());
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "numeric") {
      schema.kinds.push_back(FeatureKind::Numeric());
    } else if (kind == "categorical") {
      schema.kinds.push_back(
          FeatureKind::Categorical(f.at("levels").get<std::vector<std::string>>()));
    } else {
      throw Error("unknown feature kind '" + kind + "'");
    }
  }
  return schema;
}

json MatrixToJson(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix MatrixFromJson(const json& rows, std::size_t cols) {
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto values = rows[r].get<std::vector<double>>();
    if (values.size() != cols) throw Error("stored matrix row has the wrong width");
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

std::string SerializeModel(const Predictor& model) {
  json doc = {{"format_version", kModelFormatVersion}, {"kind", model.kind()}};
  doc["features"] = SchemaToJson(model.schema());
  if (const auto* linear = dynamic_cast<const LinearModel*>(&model)) {
    doc["interactions"] = linear->interactions();
    doc["intercept"] = linear->intercept();
    doc["coefficients"] = linear->coefficients();
    json names = json::array();
    for (const auto& term : linear->terms()) names.push_back(term.Name(model.schema()));
    doc["terms"] = std::move(names);
  } else if (const auto* forest = dynamic_cast<const ForestModel*>(&model)) {
    const ForestParams& params = forest->params();
    doc["params"] = {{"ntree", params.ntree},
                     {"mtry", params.mtry},
                     {"min_node_size", params.min_node_size},
                     {"bootstrap", params.bootstrap}};
    doc["seed"] = forest->seed();
    json trees = json::array();
    for (const auto& tree : forest->trees()) {
      json nodes = json::array();
      for (const TreeNode& node : tree.nodes()) {
        nodes.push_back({node.feature, node.categorical ? 1 : 0, node.split, node.left,
                         node.right, node.value});
      }
      trees.push_back(std::move(nodes));
    }
    doc["trees"] = std::move(trees);
  } else if (const auto* knn = dynamic_cast<const KnnModel*>(&model)) {
    doc["k"] = knn->k();
    doc["center"] = knn->center();
    doc["scale"] = knn->scale();
    doc["train_x"] = MatrixToJson(knn->train_x());
    doc["train_y"] = knn->train_y();
  } else {
    throw Error("models of kind '" + model.kind() + "' cannot be saved");
  }
  return doc.dump() + "\n";
}

std::unique_ptr<Predictor> DeserializeModel(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("format_version")) {
      throw Error("model file lacks format_version");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error("model format version " + std::to_string(version) +
                  " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind != "linear" && kind != "forest" && kind != "knn") {
      throw Error("unknown model kind '" + kind + "'");
    }
    Schema schema = SchemaFromJson(doc.at("features"));
    if (kind == "linear") {
      return std::make_unique<LinearModel>(std::move(schema), doc.at("interactions").get<bool>(),
                                           doc.at("intercept").get<double>(),
                                           doc.at("coefficients").get<std::vector<double>>());
    }
    if (kind == "forest") {
      const json& p = doc.at("params");
      ForestParams params;
      params.ntree = p.at("ntree").get<std::size_t>();
      params.mtry = p.at("mtry").get<std::size_t>();
      params.min_node_size = p.at("min_node_size").get<std::size_t>();
      params.bootstrap = p.at("bootstrap").get<bool>();
      std::vector<RegressionTree> trees;
      for (const auto& nodes : doc.at("trees")) {
        std::vector<TreeNode> tree;
        for (const auto& n : nodes) {
          TreeNode node;
          node.feature = n.at(0).get<std::int32_t>();
          node.categorical = n.at(1).get<int>() != 0;
          node.split = n.at(2).get<double>();
          node.left = n.at(3).get<std::uint32_t>();
          node.right = n.at(4).get<std::uint32_t>();
          node.value = n.at(5).get<double>();
          tree.push_back(node);
        }
        trees.emplace_back(std::move(tree));
      }
      return std::make_unique<ForestModel>(std::move(schema), params,
                                           doc.at("seed").get<std::uint64_t>(),
                                           std::move(trees));
    }
    const std::size_t p = schema.size();
    return std::make_unique<KnnModel>(std::move(schema), doc.at("k").get<std::size_t>(),
                                      MatrixFromJson(doc.at("train_x"), p),
                                      doc.at("train_y").get<std::vector<double>>(),
                                      doc.at("center").get<std::vector<double>>(),
                                      doc.at("scale").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

void SaveModel(const Predictor& model, const std::filesystem::path& path) {
  const std::string text = SerializeModel(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::unique_ptr<Predictor> LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return DeserializeModel(text);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace bbfi
