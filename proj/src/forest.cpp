// Decision-tree ensemble: bootstrap sampling, per-node feature subsets,
// Gini splits over raw trace samples and their first differences.
#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "aexns/fingerprint.hpp"

namespace aexns::fp {

namespace {

constexpr int kNumClasses = 3;

struct Dataset {
    std::vector<std::vector<double>> features;  // [sample][feature]
    std::vector<int> labels;
    int num_features = 0;
};

double gini(const std::array<std::int64_t, kNumClasses>& counts, std::int64_t total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (auto c : counts) {
        double p = static_cast<double>(c) / total;
        g -= p * p;
    }
    return g;
}

int majority(const std::array<std::int64_t, kNumClasses>& counts) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (counts[c] > counts[best]) best = c;  // tie keeps the smaller label
    }
    return best;
}

struct TreeBuilder {
    const Dataset& data;
    const ForestHyper& hyper;
    Rng rng;
    std::vector<TreeNode> nodes;
    int mtry;

    TreeBuilder(const Dataset& d, const ForestHyper& h, Rng r) : data(d), hyper(h), rng(r) {
        mtry = h.feature_subsample > 0
                   ? std::min(h.feature_subsample, d.num_features)
                   : std::max(1, static_cast<int>(std::lround(std::sqrt(d.num_features))));
    }

    int build(std::vector<int>& idx, int depth) {
        std::array<std::int64_t, kNumClasses> counts{};
        for (int i : idx) counts[data.labels[i]]++;
        std::int64_t total = static_cast<std::int64_t>(idx.size());

        bool pure = false;
        for (auto c : counts) {
            if (c == total) pure = true;
        }
        if (pure || depth >= hyper.max_depth ||
            total < 2 * static_cast<std::int64_t>(hyper.min_leaf)) {
            return leaf(counts);
        }

        // Feature subset for this node: draw mtry distinct features.
        std::vector<int> feats(data.num_features);
        std::iota(feats.begin(), feats.end(), 0);
        for (int i = 0; i < mtry; ++i) {
            int j = static_cast<int>(rng.uniform_int(i, data.num_features - 1));
            std::swap(feats[i], feats[j]);
        }
        feats.resize(mtry);

        double best_gain = 0.0;
        int best_feat = -1;
        double best_thresh = 0.0;
        double parent_gini = gini(counts, total);

        std::vector<int> order;
        for (int f : feats) {
            order = idx;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                double va = data.features[a][f], vb = data.features[b][f];
                if (va != vb) return va < vb;
                return a < b;
            });
            std::array<std::int64_t, kNumClasses> left{};
            std::int64_t nl = 0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                left[data.labels[order[i]]]++;
                ++nl;
                double v = data.features[order[i]][f];
                double vn = data.features[order[i + 1]][f];
                if (v == vn) continue;
                std::int64_t nr = total - nl;
                if (nl < hyper.min_leaf || nr < hyper.min_leaf) continue;
                std::array<std::int64_t, kNumClasses> right{};
                for (int c = 0; c < kNumClasses; ++c) right[c] = counts[c] - left[c];
                double g = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                double gain = parent_gini - g;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_feat = f;
                    best_thresh = 0.5 * (v + vn);
                }
            }
        }

        if (best_feat < 0) return leaf(counts);

        std::vector<int> li, ri;
        for (int i : idx) {
            (data.features[i][best_feat] <= best_thresh ? li : ri).push_back(i);
        }
        if (li.empty() || ri.empty()) return leaf(counts);

        int node_id = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[node_id].feature = best_feat;
        nodes[node_id].threshold = best_thresh;
        int l = build(li, depth + 1);
        int r = build(ri, depth + 1);
        nodes[node_id].left = l;
        nodes[node_id].right = r;
        return node_id;
    }

    int leaf(const std::array<std::int64_t, kNumClasses>& counts) {
        int node_id = static_cast<int>(nodes.size());
        TreeNode n;
        n.feature = -1;
        n.label = majority(counts);
        nodes.push_back(n);
        return node_id;
    }
};

int tree_predict(const std::vector<TreeNode>& tree, const std::vector<double>& feat) {
    int cur = 0;
    while (tree[cur].feature >= 0) {
        cur = feat[tree[cur].feature] <= tree[cur].threshold ? tree[cur].left : tree[cur].right;
    }
    return tree[cur].label;
}

}  // namespace

ClassifierModel train(const std::vector<std::pair<CounterTrace, InterruptClass>>& labeled,
                      const ForestHyper& hyper, Rng rng, std::uint64_t profile_hash) {
    if (labeled.empty()) throw UsageError("train: empty training set");
    Dataset data;
    data.features.reserve(labeled.size());
    std::array<std::int64_t, kNumClasses> counts{};
    for (const auto& [trace, label] : labeled) {
        data.features.push_back(trace_features(trace));
        data.labels.push_back(static_cast<int>(label));
        counts[static_cast<int>(label)]++;
    }
    int present = 0;
    for (auto c : counts) present += (c > 0);
    if (present < 2) throw UsageError("train: need at least 2 classes present");
    data.num_features = static_cast<int>(data.features[0].size());

    ClassifierModel model;
    model.hyper = hyper;
    model.class_counts = counts;
    model.train_seed = rng.seed();
    model.profile_hash = profile_hash;
    const int n = static_cast<int>(labeled.size());
    for (int t = 0; t < hyper.num_trees; ++t) {
        Rng tree_rng = rng.substream(static_cast<std::uint64_t>(t));
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) {
            idx[i] = static_cast<int>(tree_rng.uniform_int(0, n - 1));  // bootstrap
        }
        TreeBuilder builder(data, hyper, tree_rng.substream("split"));
        builder.build(idx, 0);
        model.trees.push_back(std::move(builder.nodes));
    }
    return model;
}

InterruptClass predict(const ClassifierModel& model, const CounterTrace& trace) {
    if (model.empty()) throw UsageError("predict: model not trained");
    std::vector<double> feat = trace_features(trace);
    std::array<int, kNumClasses> votes{};
    for (const auto& tree : model.trees) votes[tree_predict(tree, feat)]++;
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (votes[c] > votes[best]) best = c;  // tie keeps the smaller label
    }
    return static_cast<InterruptClass>(best);
}

void save_model(const ClassifierModel& model, std::ostream& out) {
    out << "aexns-forest v1\n";
    out << "train_seed " << model.train_seed << "\n";
    out << "profile_hash " << model.profile_hash << "\n";
    out << "hyper " << model.hyper.num_trees << " " << model.hyper.max_depth << " "
        << model.hyper.min_leaf << " " << model.hyper.feature_subsample << "\n";
    out << "class_counts " << model.class_counts[0] << " " << model.class_counts[1] << " "
        << model.class_counts[2] << "\n";
    out << "trees " << model.trees.size() << "\n";
    out.precision(17);
    for (const auto& tree : model.trees) {
        out << "tree " << tree.size() << "\n";
        for (const auto& n : tree) {
            out << n.feature << " " << n.threshold << " " << n.left << " " << n.right << " "
                << n.label << "\n";
        }
    }
}

ClassifierModel load_model(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != "aexns-forest" || version != "v1") {
        throw ConfigError("unrecognized model format");
    }
    ClassifierModel model;
    std::string key;
    std::size_t num_trees = 0;
    in >> key >> model.train_seed;
    in >> key >> model.profile_hash;
    in >> key >> model.hyper.num_trees >> model.hyper.max_depth >> model.hyper.min_leaf >>
        model.hyper.feature_subsample;
    in >> key >> model.class_counts[0] >> model.class_counts[1] >> model.class_counts[2];
    in >> key >> num_trees;
    for (std::size_t t = 0; t < num_trees; ++t) {
        std::size_t nn = 0;
        in >> key >> nn;
        std::vector<TreeNode> tree(nn);
        for (auto& n : tree) in >> n.feature >> n.threshold >> n.left >> n.right >> n.label;
        model.trees.push_back(std::move(tree));
    }
    if (!in) throw ConfigError("truncated model file");
    return model;
}

void save_corpus(const std::vector<std::pair<CounterTrace, InterruptClass>>& corpus,
                 std::ostream& out) {
    for (int i = 0; i < kTraceLen; ++i) out << "s" << i << ",";
    out << "label\n";
    out.precision(17);
    for (const auto& [trace, label] : corpus) {
        for (int i = 0; i < kTraceLen; ++i) out << trace.samples[i] << ",";
        out << class_name(label) << "\n";
    }
}

}  // namespace aexns::fp
