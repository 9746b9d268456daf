#include "nilm/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace nilm {

uint16_t DecisionTree::predict(std::span<const double> x) const {
    int32_t i = 0;
    for (;;) {
        const TreeNode& node = nodes[size_t(i)];
        if (node.feature < 0) return node.leaf_class;
        i = x[size_t(node.feature)] <= node.threshold ? node.left : node.right;
    }
}

int DecisionTree::depth() const {
    // nodes are laid out with children after parents, so one forward pass works
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        const TreeNode& node = nodes[i];
        best = std::max(best, d[i]);
        if (node.feature >= 0) {
            d[size_t(node.left)] = d[i] + 1;
            d[size_t(node.right)] = d[i] + 1;
        }
    }
    return best;
}

size_t DecisionTree::leaf_count() const {
    size_t n = 0;
    for (const auto& node : nodes)
        if (node.feature < 0) ++n;
    return n;
}

double entropy_of_counts(const uint32_t* counts, size_t n_classes, uint32_t total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    double n = double(total);
    for (size_t c = 0; c < n_classes; ++c) {
        if (counts[c] == 0) continue;
        double p = double(counts[c]) / n;
        h -= p * std::log2(p);
    }
    return h;
}

double split_gain(const uint32_t* left, const uint32_t* right, size_t n_classes, uint32_t n_left,
                  uint32_t n_right, double parent_entropy, uint32_t n_total) {
    double hl = entropy_of_counts(left, n_classes, n_left);
    double hr = entropy_of_counts(right, n_classes, n_right);
    double n = double(n_total);
    return parent_entropy - (double(n_left) / n) * hl - (double(n_right) / n) * hr;
}

double midpoint_threshold(double lo, double hi) {
    double mid = lo + (hi - lo) / 2.0;
    if (!(mid < hi)) mid = lo;
    return mid;
}

namespace {

struct WorkItem {
    int32_t node_index;
    uint32_t begin, end;
    int depth;
};

struct NodeScratch {
    std::vector<std::pair<double, uint16_t>> sorted;  // (value, class)
    std::vector<uint32_t> left_counts;
    std::vector<uint32_t> node_counts;
    std::vector<uint16_t> present;  // classes present in this node
    std::vector<uint32_t> feature_perm;
};

}  // namespace

DecisionTree train_tree(const DataMatrix& X, std::span<const uint16_t> y, uint16_t n_classes,
                        const ForestParams& params, Rng& rng,
                        std::span<const uint32_t> sample_indices) {
    require(X.rows > 0 && X.rows == y.size(), Err::EmptyData, "empty or mismatched training data");
    require(n_classes >= 2, Err::BadConfig, "need at least two classes");
    const size_t d = X.cols;
    int mtry = params.mtry > 0 ? params.mtry : int(std::ceil(std::sqrt(double(d))));
    mtry = std::min<int>(mtry, int(d));

    std::vector<uint32_t> idx;
    if (sample_indices.empty()) {
        idx.resize(X.rows);
        for (size_t i = 0; i < X.rows; ++i) idx[i] = uint32_t(i);
    } else {
        idx.assign(sample_indices.begin(), sample_indices.end());
    }

    DecisionTree tree;
    tree.nodes.reserve(256);
    NodeScratch scratch;
    scratch.left_counts.assign(n_classes, 0);
    scratch.node_counts.assign(n_classes, 0);
    scratch.feature_perm.resize(d);
    for (size_t f = 0; f < d; ++f) scratch.feature_perm[f] = uint32_t(f);

    tree.nodes.emplace_back();
    std::vector<WorkItem> stack;
    stack.push_back({0, 0, uint32_t(idx.size()), 0});

    auto make_leaf = [&](int32_t node_index, const std::vector<uint32_t>& counts) {
        TreeNode& node = tree.nodes[size_t(node_index)];
        node.feature = -1;
        node.counts_begin = int64_t(tree.leaf_counts.size());
        uint16_t best = 0;
        uint32_t best_count = 0;
        for (uint16_t c = 0; c < n_classes; ++c) {
            tree.leaf_counts.push_back(counts[c]);
            if (counts[c] > best_count) {
                best_count = counts[c];
                best = c;
            }
        }
        node.leaf_class = best;
    };

    while (!stack.empty()) {
        WorkItem item = stack.back();
        stack.pop_back();
        const uint32_t n = item.end - item.begin;

        auto& counts = scratch.node_counts;
        std::fill(counts.begin(), counts.end(), 0);
        scratch.present.clear();
        for (uint32_t i = item.begin; i < item.end; ++i) {
            uint16_t c = y[idx[i]];
            if (counts[c] == 0) scratch.present.push_back(c);
            ++counts[c];
        }
        std::sort(scratch.present.begin(), scratch.present.end());
        const bool pure = scratch.present.size() <= 1;
        if (pure || item.depth >= params.max_depth || n < uint32_t(params.min_samples_split)) {
            make_leaf(item.node_index, counts);
            continue;
        }

        const double parent_entropy = entropy_of_counts(counts.data(), n_classes, n);

        // random feature subset, then ascending order for the tie rule
        for (int j = 0; j < mtry; ++j) {
            size_t pick = size_t(j) + rng.index(d - size_t(j));
            std::swap(scratch.feature_perm[size_t(j)], scratch.feature_perm[pick]);
        }
        std::sort(scratch.feature_perm.begin(), scratch.feature_perm.begin() + mtry);

        double best_gain = 0.0;
        int32_t best_feature = -1;
        double best_threshold = 0.0;
        const uint32_t min_leaf = uint32_t(params.min_samples_leaf);

        for (int j = 0; j < mtry; ++j) {
            const uint32_t f = scratch.feature_perm[size_t(j)];
            scratch.sorted.clear();
            for (uint32_t i = item.begin; i < item.end; ++i)
                scratch.sorted.emplace_back(X.at(idx[i], f), y[idx[i]]);
            std::sort(scratch.sorted.begin(), scratch.sorted.end());
            if (scratch.sorted.front().first == scratch.sorted.back().first) continue;

            auto& left = scratch.left_counts;
            for (uint16_t c : scratch.present) left[c] = 0;
            for (uint32_t i = 0; i + 1 < n; ++i) {
                ++left[scratch.sorted[i].second];
                if (scratch.sorted[i].first == scratch.sorted[i + 1].first) continue;
                uint32_t nl = i + 1;
                uint32_t nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                double hl = 0.0, hr = 0.0;
                for (uint16_t c : scratch.present) {
                    uint32_t cl = left[c];
                    uint32_t cr = counts[c] - cl;
                    if (cl) {
                        double p = double(cl) / double(nl);
                        hl -= p * std::log2(p);
                    }
                    if (cr) {
                        double p = double(cr) / double(nr);
                        hr -= p * std::log2(p);
                    }
                }
                double gain = parent_entropy - (double(nl) / double(n)) * hl -
                              (double(nr) / double(n)) * hr;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = int32_t(f);
                    best_threshold =
                        midpoint_threshold(scratch.sorted[i].first, scratch.sorted[i + 1].first);
                }
            }
        }

        if (best_feature < 0) {
            make_leaf(item.node_index, counts);
            continue;
        }

        auto mid = std::partition(idx.begin() + item.begin, idx.begin() + item.end,
                                  [&](uint32_t i) { return X.at(i, size_t(best_feature)) <= best_threshold; });
        uint32_t split_at = uint32_t(mid - idx.begin());
        // a valid gain guarantees both sides are nonempty
        int32_t left_index = int32_t(tree.nodes.size());
        tree.nodes.emplace_back();
        int32_t right_index = int32_t(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[size_t(item.node_index)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left_index;
        node.right = right_index;
        stack.push_back({right_index, split_at, item.end, item.depth + 1});
        stack.push_back({left_index, item.begin, split_at, item.depth + 1});
    }
    return tree;
}

ForestModel train_forest(const DataMatrix& X, std::span<const uint16_t> y, uint16_t n_classes,
                         const ForestParams& params, uint64_t seed) {
    require(X.rows > 0 && X.rows == y.size(), Err::EmptyData, "empty or mismatched training data");
    require(params.n_trees >= 1, Err::BadConfig, "need at least one tree");
    ForestModel model;
    model.params = params;
    model.n_features = uint32_t(X.cols);
    model.n_classes = n_classes;
    model.trees.resize(size_t(params.n_trees));
    parallel_for(size_t(params.n_trees), [&](size_t t) {
        Rng rng(derive_seed(seed, 1, t));
        std::vector<uint32_t> indices;
        if (params.bootstrap) {
            indices.resize(X.rows);
            for (size_t i = 0; i < X.rows; ++i) indices[i] = uint32_t(rng.below(X.rows));
        }
        model.trees[t] = train_tree(X, y, n_classes, params, rng,
                                    std::span<const uint32_t>(indices));
    });
    return model;
}

std::pair<uint16_t, double> ForestModel::predict(std::span<const double> x) const {
    require(x.size() == n_features, Err::DimMismatch, "feature dimension mismatch");
    std::vector<uint32_t> votes(n_classes, 0);
    for (const auto& tree : trees) ++votes[tree.predict(x)];
    uint16_t best = 0;
    for (uint16_t c = 1; c < n_classes; ++c)
        if (votes[c] > votes[best]) best = c;
    return {best, double(votes[best]) / double(trees.size())};
}

namespace {

constexpr char kForestMagic[4] = {'N', 'L', 'R', 'F'};
constexpr uint32_t kForestVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(bool(is), Err::BadFile, "truncated forest file");
    return v;
}

constexpr size_t kNodeRecordSize = 4 + 8 + 4 + 4;  // feature, threshold, left, right

}  // namespace

size_t ForestModel::serialized_size() const {
    size_t bytes = 4 + 4 + 4 + 4 + 2 + 4 + 4 + 1;  // header
    for (const auto& tree : trees) {
        bytes += 8 + 8;
        bytes += tree.nodes.size() * kNodeRecordSize;
        bytes += tree.leaf_counts.size() * sizeof(uint32_t);
    }
    return bytes;
}

void ForestModel::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    require(bool(os), Err::BadFile, "cannot open for write: " + path);
    os.write(kForestMagic, 4);
    put(os, kForestVersion);
    put(os, uint32_t(trees.size()));
    put(os, n_features);
    put(os, n_classes);
    put(os, int32_t(params.max_depth));
    put(os, int32_t(params.mtry));
    put(os, uint8_t(params.bootstrap ? 1 : 0));
    for (const auto& tree : trees) {
        put(os, uint64_t(tree.nodes.size()));
        put(os, uint64_t(tree.leaf_counts.size()));
        for (const auto& node : tree.nodes) {
            put(os, node.feature);
            put(os, node.threshold);
            put(os, node.left);
            put(os, node.right);
        }
        os.write(reinterpret_cast<const char*>(tree.leaf_counts.data()),
                 std::streamsize(tree.leaf_counts.size() * sizeof(uint32_t)));
    }
    require(bool(os), Err::BadFile, "write failed: " + path);
}

ForestModel ForestModel::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), Err::BadFile, "cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, kForestMagic, 4) == 0, Err::BadFile,
            "bad forest magic in " + path);
    require(get<uint32_t>(is) == kForestVersion, Err::BadFile, "unsupported forest version");
    ForestModel model;
    uint32_t n_trees = get<uint32_t>(is);
    model.n_features = get<uint32_t>(is);
    model.n_classes = get<uint16_t>(is);
    model.params.n_trees = int(n_trees);
    model.params.max_depth = get<int32_t>(is);
    model.params.mtry = get<int32_t>(is);
    model.params.bootstrap = get<uint8_t>(is) != 0;
    model.trees.resize(n_trees);
    for (auto& tree : model.trees) {
        uint64_t n_nodes = get<uint64_t>(is);
        uint64_t n_counts = get<uint64_t>(is);
        tree.nodes.resize(n_nodes);
        for (auto& node : tree.nodes) {
            node.feature = get<int32_t>(is);
            node.threshold = get<double>(is);
            node.left = get<int32_t>(is);
            node.right = get<int32_t>(is);
        }
        tree.leaf_counts.resize(n_counts);
        is.read(reinterpret_cast<char*>(tree.leaf_counts.data()),
                std::streamsize(n_counts * sizeof(uint32_t)));
        require(bool(is), Err::BadFile, "truncated forest counts");
        // rebuild leaf bookkeeping
        int64_t offset = 0;
        for (auto& node : tree.nodes) {
            if (node.feature >= 0) continue;
            node.counts_begin = offset;
            uint16_t best = 0;
            uint32_t best_count = 0;
            for (uint16_t c = 0; c < model.n_classes; ++c) {
                uint32_t v = tree.leaf_counts[size_t(offset) + c];
                if (v > best_count) {
                    best_count = v;
                    best = c;
                }
            }
            node.leaf_class = best;
            offset += model.n_classes;
        }
    }
    return model;
}

}  // namespace nilm
