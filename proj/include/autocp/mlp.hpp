#pragma once

#include "autocp/model_base.hpp"
#include "autocp/ridge.hpp"  // pinball_detail
#include "autocp/rng.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace autocp {
namespace mlp_detail {

// Fully connected net: `layers` tanh hidden layers of equal width, linear
// output. Weights are stored layer by layer.
struct Net {
    std::vector<Matrix> W;
    std::vector<Vector> b;

    static Net xavier(int in_dim, int hidden, int layers, int out_dim, Rng& rng) {
        Net net;
        std::vector<int> dims;
        dims.push_back(in_dim);
        for (int l = 0; l < layers; ++l) dims.push_back(hidden);
        dims.push_back(out_dim);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            double s = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
            Matrix w(dims[l], dims[l + 1]);
            for (Index i = 0; i < w.rows(); ++i)
                for (Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-s, s);
            net.W.push_back(std::move(w));
            net.b.push_back(Vector::Zero(dims[l + 1]));
        }
        return net;
    }

    Matrix forward(const Matrix& X) const {
        Matrix a = X;
        for (std::size_t l = 0; l < W.size(); ++l) {
            a = ((a * W[l]).rowwise() + b[l].transpose()).eval();
            if (l + 1 < W.size()) a = a.array().tanh();
        }
        return a;
    }

    bool finite() const {
        for (const auto& w : W)
            if (!w.allFinite()) return false;
        for (const auto& v : b)
            if (!v.allFinite()) return false;
        return true;
    }

    std::size_t n_params() const {
        std::size_t n = 0;
        for (const auto& w : W) n += static_cast<std::size_t>(w.size());
        for (const auto& v : b) n += static_cast<std::size_t>(v.size());
        return n;
    }

    Vector flatten() const {
        Vector out(static_cast<Index>(n_params()));
        Index at = 0;
        for (const auto& w : W) {
            out.segment(at, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
            at += w.size();
        }
        for (const auto& v : b) {
            out.segment(at, v.size()) = v;
            at += v.size();
        }
        return out;
    }

    void unflatten(const Vector& theta) {
        Index at = 0;
        for (auto& w : W) {
            w = Eigen::Map<const Matrix>(theta.data() + at, w.rows(), w.cols());
            at += w.size();
        }
        for (auto& v : b) {
            v = theta.segment(at, v.size());
            at += v.size();
        }
    }
};

enum class LossKind { kSquared, kPinballPair };

struct LossSpec {
    LossKind kind = LossKind::kSquared;
    double tau_lo = 0.05, tau_hi = 0.95;
    double pinball_eps = 1e-2;
    double weight_decay = 0.0;
};

// Mean batch loss plus (wd/2)*sum||W||^2, with the gradient written into
// `grad` (same shapes as the net) when non-null.
inline double loss_and_grad(const Net& net, const Matrix& X, const Vector& y, const LossSpec& spec,
                            Net* grad) {
    const auto n = static_cast<double>(X.rows());
    const std::size_t depth = net.W.size();
    std::vector<Matrix> act(depth + 1);
    act[0] = X;
    for (std::size_t l = 0; l < depth; ++l) {
        act[l + 1] = ((act[l] * net.W[l]).rowwise() + net.b[l].transpose()).eval();
        if (l + 1 < depth) act[l + 1] = act[l + 1].array().tanh();
    }
    const Matrix& out = act[depth];

    double loss = 0.0;
    Matrix dout(out.rows(), out.cols());
    if (spec.kind == LossKind::kSquared) {
        for (Index i = 0; i < out.rows(); ++i) {
            double r = out(i, 0) - y[i];
            loss += 0.5 * r * r;
            dout(i, 0) = r / n;
        }
    } else {
        for (Index i = 0; i < out.rows(); ++i) {
            double u_lo = y[i] - out(i, 0);
            double u_hi = y[i] - out(i, 1);
            loss += pinball_detail::loss(u_lo, spec.tau_lo, spec.pinball_eps) +
                    pinball_detail::loss(u_hi, spec.tau_hi, spec.pinball_eps);
            dout(i, 0) = pinball_detail::dloss_dyhat(u_lo, spec.tau_lo, spec.pinball_eps) / n;
            dout(i, 1) = pinball_detail::dloss_dyhat(u_hi, spec.tau_hi, spec.pinball_eps) / n;
        }
    }
    loss /= n;

    for (const auto& w : net.W) loss += 0.5 * spec.weight_decay * w.squaredNorm();

    if (grad) {
        grad->W.assign(depth, Matrix());
        grad->b.assign(depth, Vector());
        Matrix delta = dout;
        for (std::size_t l = depth; l-- > 0;) {
            grad->W[l] = act[l].transpose() * delta + spec.weight_decay * net.W[l];
            grad->b[l] = delta.colwise().sum();
            if (l > 0) delta = ((delta * net.W[l].transpose()).array() * (1.0 - act[l].array().square())).matrix();
        }
    }
    return loss;
}

// Mini-batch gradient descent, batch size 32, fixed learning rate, seeded
// shuffling each epoch. If the parameters blow up the whole fit restarts
// from the same initialization with the learning rate halved.
inline Net train(const Matrix& X, const Vector& y, const MlpParams& p, int out_dim, LossSpec spec,
                 std::uint64_t seed) {
    require(X.rows() == y.size() && X.rows() >= 2, "mlp: need matching X/y with >= 2 rows");
    spec.weight_decay = p.weight_decay;
    const Index n = X.rows();
    constexpr Index kBatch = 32;

    double lr = p.learning_rate;
    for (int attempt = 0; attempt < 10; ++attempt) {
        Rng rng(mix_seed(seed, 7));
        Net net = Net::xavier(static_cast<int>(X.cols()), p.hidden, p.layers, out_dim, rng);
        Net grad;
        bool ok = true;
        for (int epoch = 0; epoch < p.epochs && ok; ++epoch) {
            std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(n));
            for (Index start = 0; start < n; start += kBatch) {
                Index len = std::min(kBatch, n - start);
                Matrix xb(len, X.cols());
                Vector yb(len);
                for (Index i = 0; i < len; ++i) {
                    xb.row(i) = X.row(static_cast<Index>(perm[static_cast<std::size_t>(start + i)]));
                    yb[i] = y[static_cast<Index>(perm[static_cast<std::size_t>(start + i)])];
                }
                loss_and_grad(net, xb, yb, spec, &grad);
                for (std::size_t l = 0; l < net.W.size(); ++l) {
                    net.W[l] -= lr * grad.W[l];
                    net.b[l] -= lr * grad.b[l];
                }
            }
            if (!net.finite()) ok = false;
        }
        if (ok) return net;
        lr *= 0.5;
    }
    throw NumericError("mlp: training diverged at every learning-rate fallback");
}

}  // namespace mlp_detail

class MlpRegressor : public MeanRegressor {
public:
    static MlpRegressor fit(const Matrix& X, const Vector& y, const MlpParams& p, std::uint64_t seed) {
        MlpRegressor m;
        mlp_detail::LossSpec spec;
        spec.kind = mlp_detail::LossKind::kSquared;
        m.net_ = mlp_detail::train(X, y, p, 1, spec, seed);
        return m;
    }

    Vector predict(const Matrix& X) const override { return net_.forward(X).col(0); }

private:
    mlp_detail::Net net_;
};

class MlpQuantile : public QuantileModel {
public:
    static MlpQuantile fit(const Matrix& X, const Vector& y, const MlpParams& p, double tau_lo,
                           double tau_hi, std::uint64_t seed) {
        MlpQuantile m;
        mlp_detail::LossSpec spec;
        spec.kind = mlp_detail::LossKind::kPinballPair;
        spec.tau_lo = tau_lo;
        spec.tau_hi = tau_hi;
        double y_sd = std::sqrt((y.array() - y.mean()).square().sum() / std::max<Index>(1, y.size() - 1));
        spec.pinball_eps = std::max(1e-8, 1e-2 * y_sd);
        m.net_ = mlp_detail::train(X, y, p, 2, spec, seed);
        return m;
    }

    std::pair<Vector, Vector> predict(const Matrix& X) const override {
        Matrix out = net_.forward(X);
        return {out.col(0), out.col(1)};
    }

private:
    mlp_detail::Net net_;
};

}  // namespace autocp
