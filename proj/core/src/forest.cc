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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bbfi/error.h"
#include "bbfi/models.h"
#include "bbfi/numeric.h"
#include "bbfi/parallel.h"
#include "bbfi/random.h"

namespace bbfi {
namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  bool categorical = false;
  double value = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, const ForestParams& params, std::size_t mtry,
              CounterStream& stream)
      : d_(d), params_(params), mtry_(mtry), stream_(stream) {}

  RegressionTree Build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    struct Pending {
      std::size_t node, begin, end;
    };
    nodes_.push_back(TreeNode{});
    std::vector<Pending> stack = {{0, 0, rows_.size()}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const Split split = Grow(job.node, job.begin, job.end);
      if (!split.found) continue;

      auto first = rows_.begin() + static_cast<std::ptrdiff_t>(job.begin);
      auto last = rows_.begin() + static_cast<std::ptrdiff_t>(job.end);
      auto mid = std::stable_partition(first, last, [&](std::size_t r) {
        return GoesLeft(split, d_.at(r, split.feature));
      });
      const std::size_t mid_index = static_cast<std::size_t>(mid - rows_.begin());

      const std::size_t left = nodes_.size();
      nodes_.push_back(TreeNode{});
      const std::size_t right = nodes_.size();
      nodes_.push_back(TreeNode{});
      TreeNode& node = nodes_[job.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.categorical = split.categorical;
      node.split = split.value;
      node.left = static_cast<std::uint32_t>(left);
      node.right = static_cast<std::uint32_t>(right);
      // Right child first on the stack so the left subtree is numbered first.
      stack.push_back({right, mid_index, job.end});
      stack.push_back({left, job.begin, mid_index});
    }
    return RegressionTree(std::move(nodes_));
  }

 private:
  static bool GoesLeft(const Split& split, double x) {
    return split.categorical ? x == split.value : x <= split.value;
  }

  // Sets the node's mean and returns the best split, if any.
  Split Grow(std::size_t node, std::size_t begin, std::size_t end) {
    const std::size_t count = end - begin;
    double sum = 0.0;
    bool constant = true;
    const double y0 = d_.y()[rows_[begin]];
    RunningMean mean;
    for (std::size_t r = begin; r < end; ++r) {
      const double y = d_.y()[rows_[r]];
      sum += y;
      mean.Add(y);
      constant = constant && y == y0;
    }
    nodes_[node].value = mean.value();
    if (count <= params_.min_node_size || constant) return {};

    // Candidate features: mtry distinct draws, in draw order.
    std::vector<std::size_t> features(d_.p());
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(stream_.NextBelow(d_.p() - i));
      std::swap(features[i], features[j]);
    }

    const double parent = sum * sum / static_cast<double>(count);
    Split best;
    for (std::size_t f = 0; f < mtry_; ++f) {
      const std::size_t j = features[f];
      Split candidate = d_.kind(j).is_categorical()
                            ? BestCategorical(j, begin, end, sum, parent)
                            : BestNumeric(j, begin, end, sum, parent);
      if (candidate.found && (!best.found || candidate.gain > best.gain)) best = candidate;
    }
    return best;
  }

  Split BestNumeric(std::size_t j, std::size_t begin, std::size_t end, double sum,
                    double parent) {
    scratch_.clear();
    for (std::size_t r = begin; r < end; ++r) {
      scratch_.emplace_back(d_.at(rows_[r], j), d_.y()[rows_[r]]);
    }
    std::sort(scratch_.begin(), scratch_.end());
    const double count = static_cast<double>(scratch_.size());
    Split best;
    double left_sum = 0.0;
    for (std::size_t k = 0; k + 1 < scratch_.size(); ++k) {
      left_sum += scratch_[k].second;
      const double a = scratch_[k].first;
      const double b = scratch_[k + 1].first;
      if (a == b) continue;
      const double nl = static_cast<double>(k + 1);
      const double nr = count - nl;
      const double right_sum = sum - left_sum;
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
      if (gain > 0.0 && (!best.found || gain > best.gain)) {
        double mid = a + (b - a) / 2.0;
        if (!(mid >= a && mid < b)) mid = a;
        best = Split{true, j, false, mid, gain};
      }
    }
    return best;
  }

  Split BestCategorical(std::size_t j, std::size_t begin, std::size_t end, double sum,
                        double parent) {
    const std::size_t levels = d_.kind(j).num_levels();
    std::vector<double> level_sum(levels, 0.0);
    std::vector<std::size_t> level_count(levels, 0);
    for (std::size_t r = begin; r < end; ++r) {
      const auto level = static_cast<std::size_t>(d_.at(rows_[r], j));
      level_sum[level] += d_.y()[rows_[r]];
      ++level_count[level];
    }
    const std::size_t count = end - begin;
    Split best;
    for (std::size_t l = 0; l < levels; ++l) {
      if (level_count[l] == 0 || level_count[l] == count) continue;
      const double nl = static_cast<double>(level_count[l]);
      const double nr = static_cast<double>(count - level_count[l]);
      const double rs = sum - level_sum[l];
      const double gain = level_sum[l] * level_sum[l] / nl + rs * rs / nr - parent;
      if (gain > 0.0 && (!best.found || gain > best.gain)) {
        best = Split{true, j, true, static_cast<double>(l), gain};
      }
    }
    return best;
  }

  const Dataset& d_;
  const ForestParams& params_;
  std::size_t mtry_;
  CounterStream& stream_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, double>> scratch_;
};

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error("tree without nodes");
  for (const TreeNode& node : nodes_) {
    if (!std::isfinite(node.value)) throw Error("tree node with non-finite value");
    if (!node.is_leaf() && (node.left >= nodes_.size() || node.right >= nodes_.size())) {
      throw Error("tree node with child index out of range");
    }
  }
}

double RegressionTree::Predict(std::span<const double> row) const {
  std::size_t index = 0;
  for (;;) {
    const TreeNode& node = nodes_[index];
    if (node.is_leaf()) return node.value;
    const double x = row[static_cast<std::size_t>(node.feature)];
    const bool left = node.categorical ? x == node.split : x <= node.split;
    index = left ? node.left : node.right;
  }
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

ForestModel::ForestModel(Schema schema, ForestParams params, std::uint64_t seed,
                         std::vector<RegressionTree> trees)
    : Predictor(std::move(schema)), params_(params), seed_(seed), trees_(std::move(trees)) {
  if (trees_.empty()) throw Error("forest without trees");
  for (const auto& tree : trees_) {
    for (const TreeNode& node : tree.nodes()) {
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= num_features()) {
        throw Error("tree splits on unknown feature " + std::to_string(node.feature));
      }
    }
  }
}

std::vector<double> ForestModel::Predict(const Matrix& rows) const {
  CheckWidth(rows);
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    RunningMean mean;
    for (const auto& tree : trees_) mean.Add(tree.Predict(row));
    out[r] = mean.value();
  }
  return out;
}

std::string ForestModel::Describe() const {
  std::ostringstream os;
  os << "forest(ntree=" << params_.ntree << ",mtry=" << params_.mtry
     << ",min_node_size=" << params_.min_node_size
     << ",bootstrap=" << (params_.bootstrap ? "true" : "false") << ",seed=" << seed_ << ")";
  return os.str();
}

ForestModel FitForest(const Dataset& train, ForestParams params, std::uint64_t seed) {
  if (params.ntree < 1) throw Error("ntree must be at least 1");
  if (params.mtry == 0) params.mtry = std::max<std::size_t>(1, train.p() / 3);
  if (params.mtry < 1) throw Error("mtry must be at least 1");
  if (params.mtry > train.p()) {
    throw Error("mtry " + std::to_string(params.mtry) + " exceeds the " +
                std::to_string(train.p()) + " features");
  }
  if (train.n() < params.min_node_size) {
    throw Error("min_node_size " + std::to_string(params.min_node_size) + " exceeds the " +
                std::to_string(train.n()) + " training rows");
  }

  std::vector<RegressionTree> trees(params.ntree);
  ParallelFor(params.ntree, [&](std::size_t t) {
    CounterStream stream(DeriveKey(seed, {t}));
    std::vector<std::size_t> rows(train.n());
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(stream.NextBelow(train.n()));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeBuilder builder(train, params, params.mtry, stream);
    trees[t] = builder.Build(std::move(rows));
  });
  return ForestModel(train.schema(), params, seed, std::move(trees));
}

}  // namespace bbfi
