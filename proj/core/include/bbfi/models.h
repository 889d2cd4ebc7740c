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

#ifndef BBFI_MODELS_H_
#define BBFI_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbfi/data.h"

namespace bbfi {

// A fitted model f: rows in schema column order -> one prediction per row.
// Predict must be pure: identical rows give identical outputs regardless of
// the other rows in the batch.
class Predictor {
 public:
  explicit Predictor(Schema schema) : schema_(std::move(schema)) {}
  virtual ~Predictor() = default;

  virtual std::vector<double> Predict(const Matrix& rows) const = 0;
  virtual std::string kind() const = 0;
  // Kind tag plus hyperparameters, e.g. "forest(ntree=100,mtry=1,...)".
  virtual std::string Describe() const { return kind(); }

  const Schema& schema() const { return schema_; }
  std::size_t num_features() const { return schema_.size(); }

 protected:
  // Throws unless `rows` has one column per schema feature.
  void CheckWidth(const Matrix& rows) const;

 private:
  Schema schema_;
};

// Wraps a C++ callable; handy for synthetic models and tests.
class FunctionPredictor : public Predictor {
 public:
  using RowFunction = std::function<double(std::span<const double>)>;
  FunctionPredictor(Schema schema, RowFunction fn, std::string label = "function")
      : Predictor(std::move(schema)), fn_(std::move(fn)), label_(std::move(label)) {}

  std::vector<double> Predict(const Matrix& rows) const override;
  std::string kind() const override { return "function"; }
  std::string Describe() const override { return label_; }

 private:
  RowFunction fn_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Linear model

struct LinearTerm {
  enum class Type { kNumeric, kIndicator, kProduct };
  Type type = Type::kNumeric;
  std::size_t feature = 0;
  // Level index for kIndicator, second feature for kProduct.
  std::size_t other = 0;

  double Evaluate(std::span<const double> row) const;
  std::string Name(const Schema& schema) const;

  friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

// Main effects of every feature (categoricals one-hot with the first level as
// reference) and, with interactions, every pairwise product of numeric
// features.
std::vector<LinearTerm> ExpandLinearTerms(const Schema& schema, bool interactions);

class LinearModel : public Predictor {
 public:
  LinearModel(Schema schema, bool interactions, double intercept,
              std::vector<double> coefficients);

  std::vector<double> Predict(const Matrix& rows) const override;
  std::string kind() const override { return "linear"; }
  std::string Describe() const override;

  bool interactions() const { return interactions_; }
  double intercept() const { return intercept_; }
  const std::vector<LinearTerm>& terms() const { return terms_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  // Coefficient of the term named e.g. "x1", "x1:x2" or "color=red".
  double Coefficient(std::string_view term_name) const;

 private:
  bool interactions_;
  double intercept_;
  std::vector<LinearTerm> terms_;
  std::vector<double> coefficients_;
};

// Ordinary least squares. Fails naming the offending terms when the expanded
// design matrix is rank deficient.
LinearModel FitLinear(const Dataset& train, bool interactions);

// ---------------------------------------------------------------------------
// Random forest of CART regression trees

struct TreeNode {
  // Leaf when feature < 0.
  std::int32_t feature = -1;
  bool categorical = false;
  // Numeric split: rows with x <= split go left. Categorical split: rows whose
  // level index equals split go left.
  double split = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  // Mean response of the training rows in the node.
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double Predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t num_leaves() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct ForestParams {
  std::size_t ntree = 100;
  // 0 selects max(1, floor(p / 3)).
  std::size_t mtry = 0;
  // Nodes with at most this many rows become leaves.
  std::size_t min_node_size = 5;
  bool bootstrap = true;
};

class ForestModel : public Predictor {
 public:
  ForestModel(Schema schema, ForestParams params, std::uint64_t seed,
              std::vector<RegressionTree> trees);

  std::vector<double> Predict(const Matrix& rows) const override;
  std::string kind() const override { return "forest"; }
  std::string Describe() const override;

  const ForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  ForestParams params_;
  std::uint64_t seed_;
  std::vector<RegressionTree> trees_;
};

// Tree t is grown from its own stream DeriveKey(seed, {t}), so trees are
// fitted concurrently with results independent of the worker count.
ForestModel FitForest(const Dataset& train, ForestParams params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// k-nearest neighbours

class KnnModel : public Predictor {
 public:
  KnnModel(Schema schema, std::size_t k, Matrix train_x, std::vector<double> train_y,
           std::vector<double> center, std::vector<double> scale);
  ~KnnModel() override;
  KnnModel(KnnModel&&) noexcept;

  std::vector<double> Predict(const Matrix& rows) const override;
  std::string kind() const override { return "knn"; }
  std::string Describe() const override;

  std::size_t k() const { return k_; }
  const Matrix& train_x() const { return train_x_; }
  const std::vector<double>& train_y() const { return train_y_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& scale() const { return scale_; }

  // Indices of the k nearest training rows, nearest first; equal distances
  // are ordered by row index.
  std::vector<std::size_t> Neighbors(std::span<const double> row) const;

 private:
  struct Index;
  std::size_t k_;
  Matrix train_x_;
  std::vector<double> train_y_;
  std::vector<double> center_;
  std::vector<double> scale_;
  std::unique_ptr<Index> index_;
};

// Numeric features are standardised with the training mean and sample
// standard deviation; a categorical mismatch adds 1 to the squared distance.
KnnModel FitKnn(const Dataset& train, std::size_t k);

// ---------------------------------------------------------------------------
// External process

// Child process speaking newline-delimited JSON over stdin/stdout:
//   request  {"id":<int>,"x":[[cell,...],...]}
//   response {"id":<int>,"y":[number,...]}
// Categorical cells are sent as level strings. One request is in flight at a
// time; concurrent callers are serialised.
class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(std::vector<std::string> command, Schema schema);
  ~ExternalPredictor() override;
  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  std::vector<double> Predict(const Matrix& rows) const override;
  std::string kind() const override { return "external"; }
  std::string Describe() const override;

  const std::vector<std::string>& command() const { return command_; }
  std::uint64_t requests_sent() const;

 private:
  struct Process;
  std::vector<std::string> command_;
  std::unique_ptr<Process> process_;
};

// Fails unless the model was built for d's feature names and kinds.
void CheckSchemaMatches(const Predictor& model, const Dataset& d);

std::unique_ptr<ExternalPredictor> SpawnExternal(std::vector<std::string> command,
                                                 Schema schema);

// ---------------------------------------------------------------------------
// Persistence: {"format_version":1,"kind":"linear|forest|knn",...}

inline constexpr int kModelFormatVersion = 1;

std::string SerializeModel(const Predictor& model);
std::unique_ptr<Predictor> DeserializeModel(std::string_view text);
void SaveModel(const Predictor& model, const std::filesystem::path& path);
std::unique_ptr<Predictor> LoadModel(const std::filesystem::path& path);

}  // namespace bbfi

#endif  // BBFI_MODELS_H_
