#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include "dmlk/errors.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

struct RfParams {
    int n_trees = 200;
    int max_depth = 5;
    int min_leaf = 5;
    int mtry = 0;  // features per split; 0 means ceil(p / 3)
    bool bootstrap = true;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double predict_row(const double* row) const {
        int id = 0;
        while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
            id = (row[nd.feature] <= nd.threshold) ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(id)].value;
    }

    // longest root-to-leaf path measured in splits
    int max_path_depth() const { return depth_below(0); }

private:
    int depth_below(int id) const {
        const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
        if (nd.feature < 0) return 0;
        return 1 + std::max(depth_below(nd.left), depth_below(nd.right));
    }
};

struct ForestModel {
    std::vector<Tree> trees;
    int p = 0;

    double predict_row(const double* row) const {
        double s = 0.0;
        for (const Tree& t : trees) s += t.predict_row(row);
        return s / static_cast<double>(trees.size());
    }
};

namespace forest_detail {

// Per-forest scratch shared across trees. Rows stay deduplicated: a bootstrap
// resample is carried as per-row multiplicities, and every statistic weights
// by them. Each node owns the same slot range [lo, hi) in every feature's
// order array; a split partitions all of them stably from the current buffer
// into the other one (ping-pong by depth), so sorted order survives down the
// tree without re-sorting and without copy-backs.
struct Workspace {
    const std::vector<Vector>& xcol;                      // column-major data
    const std::vector<std::vector<std::int32_t>>& order;  // full-sample argsort per feature
    int n;
    int p;

    std::vector<std::vector<std::int32_t>> slots_a;  // ping
    std::vector<std::vector<std::int32_t>> slots_b;  // pong
    std::vector<std::int32_t> counts;                // bootstrap multiplicity per row
    Vector wy;                                       // counts[i] * y[i]
    std::vector<int> feature_pool;
    Vector inv_count;  // 1/k lookup, keeps divisions out of the split scan

    Workspace(const std::vector<Vector>& xcol_, const std::vector<std::vector<std::int32_t>>& order_, int n_, int p_)
        : xcol(xcol_), order(order_), n(n_), p(p_) {
        slots_a.assign(static_cast<std::size_t>(p), std::vector<std::int32_t>(static_cast<std::size_t>(n)));
        slots_b.assign(static_cast<std::size_t>(p), std::vector<std::int32_t>(static_cast<std::size_t>(n)));
        counts.resize(static_cast<std::size_t>(n));
        wy.resize(static_cast<std::size_t>(n));
        feature_pool.resize(static_cast<std::size_t>(p));
        inv_count.resize(static_cast<std::size_t>(n) + 1, 0.0);
        for (int k = 1; k <= n; ++k) inv_count[static_cast<std::size_t>(k)] = 1.0 / k;
    }

    void reset_slots() {
        for (int f = 0; f < p; ++f)
            std::memcpy(slots_a[static_cast<std::size_t>(f)].data(), order[static_cast<std::size_t>(f)].data(),
                        sizeof(std::int32_t) * static_cast<std::size_t>(n));
    }
};

struct TreeGrower {
    Workspace& ws;
    const RfParams& params;
    int mtry;
    SeededStream rng;
    Tree tree;

    TreeGrower(Workspace& ws_, const RfParams& params_, int mtry_, SeededStream rng_)
        : ws(ws_), params(params_), mtry(mtry_), rng(rng_) {}

    // weight = bootstrap copies in the node, sum = weighted response total;
    // both are threaded through the recursion from the split scan
    int build(int lo, int hi, int depth, double sum, int weight) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        tree.nodes[static_cast<std::size_t>(id)].value = sum / weight;
        if (depth >= params.max_depth || weight < 2 * params.min_leaf) return id;

        auto& cur_slots = (depth & 1) ? ws.slots_b : ws.slots_a;
        auto& next_slots = (depth & 1) ? ws.slots_a : ws.slots_b;

        for (int j = 0; j < ws.p; ++j) ws.feature_pool[static_cast<std::size_t>(j)] = j;
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_left_sum = 0.0;
        int best_left_weight = 0;
        double best_score = sum * sum * ws.inv_count[static_cast<std::size_t>(weight)];
        const double* inv = ws.inv_count.data();
        const std::int32_t* cnt = ws.counts.data();
        const double* wy = ws.wy.data();

        for (int t = 0; t < mtry; ++t) {
            const int pick = t + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(ws.p - t)));
            std::swap(ws.feature_pool[static_cast<std::size_t>(t)], ws.feature_pool[static_cast<std::size_t>(pick)]);
            const int f = ws.feature_pool[static_cast<std::size_t>(t)];

            const std::int32_t* slot = cur_slots[static_cast<std::size_t>(f)].data();
            const double* col = ws.xcol[static_cast<std::size_t>(f)].data();
            double left_sum = 0.0;
            int left_w = 0;
            double prev = 0.0;
            for (int s = lo; s < hi; ++s) {
                const std::int32_t i = slot[s];
                const std::int32_t c = cnt[i];
                if (c == 0) continue;  // row not in this resample
                const double cur = col[i];
                const int right_w = weight - left_w;
                if (left_w >= params.min_leaf && right_w >= params.min_leaf && prev < cur) {
                    const double right_sum = sum - left_sum;
                    const double score = left_sum * left_sum * inv[left_w] + right_sum * right_sum * inv[right_w];
                    if (score > best_score) {
                        best_score = score;
                        best_feature = f;
                        best_left_sum = left_sum;
                        best_left_weight = left_w;
                        double thr = prev + (cur - prev) / 2.0;
                        if (!(thr < cur)) thr = prev;  // midpoint rounding guard
                        best_threshold = thr;
                    }
                }
                left_sum += wy[i];
                left_w += c;
                prev = cur;
            }
        }
        if (best_feature < 0) return id;

        const int nlw = best_left_weight;
        const int nrw = weight - nlw;
        tree.nodes[static_cast<std::size_t>(id)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = best_threshold;

        if (depth + 1 >= params.max_depth || (nlw < 2 * params.min_leaf && nrw < 2 * params.min_leaf)) {
            // both children are leaves: nothing below ever scans the slot
            // arrays again, so skip the partition entirely
            const int left = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{});
            tree.nodes.back().value = best_left_sum / nlw;
            const int right = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{});
            tree.nodes.back().value = (sum - best_left_sum) / nrw;
            tree.nodes[static_cast<std::size_t>(id)].left = left;
            tree.nodes[static_cast<std::size_t>(id)].right = right;
            return id;
        }

        // stable partition of every feature's slot range into the other buffer
        const double* split_col = ws.xcol[static_cast<std::size_t>(best_feature)].data();
        int nl_slots = 0;
        for (int f = 0; f < ws.p; ++f) {
            const std::int32_t* src = cur_slots[static_cast<std::size_t>(f)].data();
            std::int32_t* dst = next_slots[static_cast<std::size_t>(f)].data();
            int wl = lo;
            int wr = hi;  // filled backward, then reversed into order
            for (int s = lo; s < hi; ++s) {
                const std::int32_t i = src[s];
                if (split_col[i] <= best_threshold)
                    dst[wl++] = i;
                else
                    dst[--wr] = i;
            }
            std::reverse(dst + wr, dst + hi);
            nl_slots = wl - lo;
        }

        const int left = build(lo, lo + nl_slots, depth + 1, best_left_sum, nlw);
        const int right = build(lo + nl_slots, hi, depth + 1, sum - best_left_sum, nrw);
        tree.nodes[static_cast<std::size_t>(id)].left = left;
        tree.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }
};

}  // namespace forest_detail

// Regression forest: bootstrap resamples (sample size n, with replacement),
// variance-reduction splits, split points at midpoints between sorted unique
// feature values. Trees draw from streams forked per tree index up front, so
// the ensemble is reproducible and trees could be grown in any order.
inline ForestModel fit_forest(const RfParams& params, const Matrix& x, const Vector& y, SeededStream& stream) {
    const int n = x.rows();
    const int p = x.cols();
    if (n < 2) throw ValidationError("fit_forest: need at least 2 observations");
    if (params.n_trees < 1) throw ValidationError("fit_forest: n_trees must be >= 1");
    if (params.max_depth < 0) throw ValidationError("fit_forest: max_depth must be >= 0");
    if (params.min_leaf < 1) throw ValidationError("fit_forest: min_leaf must be >= 1");
    const int mtry = (params.mtry > 0) ? std::min(params.mtry, p) : (p + 2) / 3;

    // one argsort and one contiguous column copy per feature for the whole
    // forest; resamples only change row weights
    std::vector<std::vector<std::int32_t>> order(static_cast<std::size_t>(p));
    std::vector<Vector> xcol(static_cast<std::size_t>(p), Vector(static_cast<std::size_t>(n)));
    for (int f = 0; f < p; ++f) {
        auto& col = xcol[static_cast<std::size_t>(f)];
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = x(i, f);
        auto& idx = order[static_cast<std::size_t>(f)];
        idx.resize(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
            return col[static_cast<std::size_t>(a)] < col[static_cast<std::size_t>(b)] ||
                   (col[static_cast<std::size_t>(a)] == col[static_cast<std::size_t>(b)] && a < b);
        });
    }

    forest_detail::Workspace ws(xcol, order, n, p);
    ForestModel model;
    model.p = p;
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));

    for (int t = 0; t < params.n_trees; ++t) {
        SeededStream tree_rng = stream.fork(static_cast<std::uint64_t>(t));
        if (params.bootstrap) {
            std::fill(ws.counts.begin(), ws.counts.end(), 0);
            const std::uint64_t un = static_cast<std::uint64_t>(n);
            const std::uint64_t threshold = (0 - un) % un;  // rejection bound, hoisted
            for (int i = 0; i < n; ++i) {
                std::uint64_t draw;
                do {
                    draw = tree_rng.next_u64();
                } while (draw < threshold);
                ++ws.counts[static_cast<std::size_t>(draw % un)];
            }
        } else {
            std::fill(ws.counts.begin(), ws.counts.end(), 1);
        }
        ws.reset_slots();
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            ws.wy[iu] = ws.counts[iu] * y[iu];
            total += ws.wy[iu];
        }

        forest_detail::TreeGrower grower(ws, params, mtry, tree_rng);
        grower.tree.nodes.reserve(64);
        grower.build(0, n, 0, total, n);
        model.trees.push_back(std::move(grower.tree));
    }
    return model;
}

}  // namespace dmlk
