#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nilm/common.hpp"

namespace nilm {

struct ForestParams {
    int n_trees = 200;
    int max_depth = 35;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int mtry = 0;  // features tried per split; 0 means ceil(sqrt(d))
    bool bootstrap = true;
};

// Row-major feature matrix shared by the tree trainers.
struct DataMatrix {
    size_t rows = 0, cols = 0;
    std::vector<double> values;
    double at(size_t r, size_t c) const { return values[r * cols + c]; }
};

struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    int64_t counts_begin = -1;  // leaf: offset into leaf_counts (n_classes entries)
    uint16_t leaf_class = 0;    // argmax of the counts, precomputed
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::vector<uint32_t> leaf_counts;

    uint16_t predict(std::span<const double> x) const;
    int depth() const;
    size_t leaf_count() const;
};

// Gain helper shared with the brute-force test oracle so that gain
// comparisons are bit-identical: H = sum over classes of -p log2 p.
double entropy_of_counts(const uint32_t* counts, size_t n_classes, uint32_t total);
double split_gain(const uint32_t* left, const uint32_t* right, size_t n_classes, uint32_t n_left,
                  uint32_t n_right, double parent_entropy, uint32_t n_total);

// Split thresholds are midpoints between consecutive distinct sorted
// values, clamped so that `x <= threshold` reproduces the scan partition
// even when the midpoint rounds up.
double midpoint_threshold(double lo, double hi);

struct ForestModel {
    ForestParams params;
    uint32_t n_features = 0;
    uint16_t n_classes = 2;
    std::vector<DecisionTree> trees;

    // Majority vote; ties resolve to the smaller class label (0 = OFF).
    std::pair<uint16_t, double> predict(std::span<const double> x) const;

    size_t serialized_size() const;
    void save(const std::string& path) const;
    static ForestModel load(const std::string& path);
};

// Greedy top-down induction with entropy gain over a random feature subset
// per node. Ties break toward the lowest feature index, then the lowest
// threshold.
DecisionTree train_tree(const DataMatrix& X, std::span<const uint16_t> y, uint16_t n_classes,
                        const ForestParams& params, Rng& rng,
                        std::span<const uint32_t> sample_indices = {});

ForestModel train_forest(const DataMatrix& X, std::span<const uint16_t> y, uint16_t n_classes,
                         const ForestParams& params, uint64_t seed);

}  // namespace nilm
