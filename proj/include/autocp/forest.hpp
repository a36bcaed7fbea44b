#pragma once

#include "autocp/model_base.hpp"
#include "autocp/rng.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

namespace autocp {

// CART regression tree with variance-reduction splits. Trees are grown on
// the full sample; randomness enters through the per-node feature subset.
// Leaves keep their training-label multiset so a fitted forest can also be
// read out as a quantile estimator.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        double mean = 0.0;
        std::vector<double> leaf_labels;
    };

    static RegressionTree fit(const Matrix& X, const Vector& y, const ForestParams& p, Rng rng) {
        RegressionTree t;
        std::vector<std::size_t> idx(static_cast<std::size_t>(X.rows()));
        std::iota(idx.begin(), idx.end(), 0);
        t.build(X, y, p, rng, idx, 0);
        return t;
    }

    const Node& leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int node = 0;
        while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
            const Node& nd = nodes_[static_cast<std::size_t>(node)];
            node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(node)];
    }

private:
    int build(const Matrix& X, const Vector& y, const ForestParams& p, Rng& rng,
              const std::vector<std::size_t>& idx, int depth) {
        const auto n = idx.size();
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i : idx) {
            double v = y[static_cast<Index>(i)];
            sum += v;
            sum2 += v * v;
        }
        const double node_sse = sum2 - sum * sum / static_cast<double>(n);

        int best_feature = -1;
        double best_threshold = 0.0, best_gain = 1e-12;
        std::size_t best_pos = 0;
        std::vector<std::size_t> order;

        if (depth < p.max_depth && n >= 2 * static_cast<std::size_t>(p.min_leaf) && node_sse > 1e-12) {
            const auto d = static_cast<std::size_t>(X.cols());
            auto k = static_cast<std::size_t>(std::ceil(p.feature_frac * static_cast<double>(d)));
            k = std::min(std::max<std::size_t>(k, 1), d);
            std::vector<std::size_t> feats(d);
            std::iota(feats.begin(), feats.end(), 0);
            rng.shuffle(feats);
            feats.resize(k);

            std::vector<std::size_t> sorted = idx;
            std::vector<std::size_t> best_order;
            for (std::size_t f : feats) {
                const auto fc = static_cast<Index>(f);
                std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                    double xa = X(static_cast<Index>(a), fc), xb = X(static_cast<Index>(b), fc);
                    return xa < xb || (xa == xb && a < b);
                });
                double left_sum = 0.0, left_sum2 = 0.0;
                for (std::size_t pos = 1; pos < n; ++pos) {
                    double v = y[static_cast<Index>(sorted[pos - 1])];
                    left_sum += v;
                    left_sum2 += v * v;
                    double xl = X(static_cast<Index>(sorted[pos - 1]), fc);
                    double xr = X(static_cast<Index>(sorted[pos]), fc);
                    if (xl == xr) continue;
                    if (pos < static_cast<std::size_t>(p.min_leaf) || n - pos < static_cast<std::size_t>(p.min_leaf)) continue;
                    double right_sum = sum - left_sum, right_sum2 = sum2 - left_sum2;
                    double sse_l = left_sum2 - left_sum * left_sum / static_cast<double>(pos);
                    double sse_r = right_sum2 - right_sum * right_sum / static_cast<double>(n - pos);
                    double gain = node_sse - sse_l - sse_r;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = static_cast<int>(f);
                        best_threshold = 0.5 * (xl + xr);
                        best_pos = pos;
                        best_order = sorted;
                    }
                }
            }
            order = std::move(best_order);
        }

        const int me = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (best_feature < 0) {
            Node& leaf = nodes_.back();
            leaf.mean = sum / static_cast<double>(n);
            leaf.leaf_labels.reserve(n);
            for (std::size_t i : idx) leaf.leaf_labels.push_back(y[static_cast<Index>(i)]);
            std::sort(leaf.leaf_labels.begin(), leaf.leaf_labels.end());
            return me;
        }

        std::vector<std::size_t> left_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_pos));
        std::vector<std::size_t> right_idx(order.begin() + static_cast<std::ptrdiff_t>(best_pos), order.end());
        nodes_[static_cast<std::size_t>(me)].feature = best_feature;
        nodes_[static_cast<std::size_t>(me)].threshold = best_threshold;
        int l = build(X, y, p, rng, left_idx, depth + 1);
        int r = build(X, y, p, rng, right_idx, depth + 1);
        nodes_[static_cast<std::size_t>(me)].left = l;
        nodes_[static_cast<std::size_t>(me)].right = r;
        return me;
    }

    std::vector<Node> nodes_;
};

class ForestRegressor : public MeanRegressor {
public:
    static ForestRegressor fit(const Matrix& X, const Vector& y, const ForestParams& p, std::uint64_t seed) {
        require(X.rows() == y.size() && X.rows() >= 2, "forest: need matching X/y with >= 2 rows");
        require(p.n_trees >= 1 && p.max_depth >= 1 && p.min_leaf >= 1, "forest: bad params");
        require(p.feature_frac > 0.0 && p.feature_frac <= 1.0, "forest: feature_frac must be in (0,1]");
        ForestRegressor f;
        f.trees_.reserve(static_cast<std::size_t>(p.n_trees));
        for (int t = 0; t < p.n_trees; ++t) f.trees_.push_back(RegressionTree::fit(X, y, p, Rng(mix_seed(seed, static_cast<std::uint64_t>(t)))));
        return f;
    }

    Vector predict(const Matrix& X) const override {
        Vector out = Vector::Zero(X.rows());
        for (Index i = 0; i < X.rows(); ++i) {
            double s = 0.0;
            for (const auto& t : trees_) s += t.leaf_for(X.row(i)).mean;
            out[i] = s / static_cast<double>(trees_.size());
        }
        return out;
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    std::vector<RegressionTree> trees_;
};

// Quantile read-out of a fitted forest: the leaf label multisets of all
// trees at x are pooled and the empirical quantiles taken from the pool.
class ForestQuantile : public QuantileModel {
public:
    ForestQuantile(ForestRegressor forest, double tau_lo, double tau_hi)
        : forest_(std::move(forest)), tau_lo_(tau_lo), tau_hi_(tau_hi) {}

    std::pair<Vector, Vector> predict(const Matrix& X) const override {
        Vector lo(X.rows()), hi(X.rows());
        std::vector<double> pool;
        for (Index i = 0; i < X.rows(); ++i) {
            pool.clear();
            for (const auto& t : forest_.trees()) {
                const auto& labels = t.leaf_for(X.row(i)).leaf_labels;
                pool.insert(pool.end(), labels.begin(), labels.end());
            }
            lo[i] = empirical_quantile(pool, tau_lo_);
            hi[i] = empirical_quantile(pool, tau_hi_);
        }
        return {lo, hi};
    }

private:
    static double empirical_quantile(std::vector<double>& v, double tau) {
        const auto n = v.size();
        auto k = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n)));
        k = std::min(std::max<std::size_t>(k, 1), n) - 1;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
        return v[k];
    }

    ForestRegressor forest_;
    double tau_lo_, tau_hi_;
};

}  // namespace autocp
