#pragma once

#include "autocp/model_base.hpp"

#include <cmath>
#include <memory>

namespace autocp {

// Linear model with an L2 penalty on the weights. The intercept is left
// unpenalized by centering features and labels before solving the penalized
// normal equations (X'X + lambda I) w = X'y.
class RidgeRegressor : public MeanRegressor {
public:
    static RidgeRegressor fit(const Matrix& X, const Vector& y, double lambda) {
        require(X.rows() == y.size() && X.rows() >= 2, "ridge: need matching X/y with >= 2 rows");
        require(lambda > 0.0, "ridge: lambda must be positive");
        RidgeRegressor r;
        Eigen::RowVectorXd x_mean = X.colwise().mean();
        double y_mean = y.mean();
        Matrix Xc = X.rowwise() - x_mean;
        Vector yc = y.array() - y_mean;
        Matrix a = Xc.transpose() * Xc;
        a.diagonal().array() += lambda;
        r.coef_ = a.ldlt().solve(Xc.transpose() * yc);
        if (!r.coef_.allFinite()) throw NumericError("ridge: singular penalized system");
        r.intercept_ = y_mean - x_mean.dot(r.coef_);
        return r;
    }

    Vector predict(const Matrix& X) const override {
        return (X * coef_).array() + intercept_;
    }

    const Vector& coefficients() const { return coef_; }
    double intercept() const { return intercept_; }

private:
    Vector coef_;
    double intercept_ = 0.0;
};

namespace pinball_detail {

// Smoothed pinball loss: tau*u + eps*softplus(-u/eps) with u = y - yhat.
// The softplus term converges to max(0, -u) as eps -> 0; gradients are
// smooth everywhere, which keeps plain first-order optimizers stable.
inline double softplus(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return 0.0;
    return std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
    if (z > 30.0) return 1.0;
    if (z < -30.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-z));
}

inline double loss(double u, double tau, double eps) { return tau * u + eps * softplus(-u / eps); }

// d/d(yhat) of loss(y - yhat, ...).
inline double dloss_dyhat(double u, double tau, double eps) { return -(tau - sigmoid(-u / eps)); }

}  // namespace pinball_detail

// Linear conditional quantile pair trained by full-batch Adam on the
// smoothed pinball loss, with the same unpenalized-intercept ridge penalty
// as the mean head.
class RidgeQuantile : public QuantileModel {
public:
    static RidgeQuantile fit(const Matrix& X, const Vector& y, double lambda, double tau_lo, double tau_hi) {
        RidgeQuantile q;
        q.lo_ = fit_single(X, y, lambda, tau_lo);
        q.hi_ = fit_single(X, y, lambda, tau_hi);
        return q;
    }

    std::pair<Vector, Vector> predict(const Matrix& X) const override {
        Vector lo = (X * lo_.w).array() + lo_.b;
        Vector hi = (X * hi_.w).array() + hi_.b;
        return {lo, hi};
    }

private:
    struct Linear {
        Vector w;
        double b = 0.0;
    };

    static Linear fit_single(const Matrix& X, const Vector& y, double lambda, double tau) {
        const Index n = X.rows(), d = X.cols();
        const double y_sd = std::max(1e-8, std::sqrt((y.array() - y.mean()).square().sum() / std::max<Index>(1, n - 1)));
        const double eps = 1e-2 * y_sd;
        const int iters = 1500;
        const double lr0 = 0.1 * y_sd;

        Linear m;
        m.w = Vector::Zero(d);
        // start at the median-ish center
        m.b = y.mean();

        Vector mw = Vector::Zero(d), vw = Vector::Zero(d);
        double mb = 0.0, vb = 0.0;
        const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;

        for (int t = 1; t <= iters; ++t) {
            Vector pred = (X * m.w).array() + m.b;
            Vector g(n);
            for (Index i = 0; i < n; ++i) g[i] = pinball_detail::dloss_dyhat(y[i] - pred[i], tau, eps);
            Vector gw = X.transpose() * g / static_cast<double>(n) + (lambda / static_cast<double>(n)) * m.w;
            double gb = g.mean();

            double lr = lr0 * (1.0 - static_cast<double>(t - 1) / iters);
            mw = b1 * mw + (1 - b1) * gw;
            vw = b2 * vw.array() + (1 - b2) * gw.array().square();
            mb = b1 * mb + (1 - b1) * gb;
            vb = b2 * vb + (1 - b2) * gb * gb;
            double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
            m.w -= (lr * (mw / c1).array() / ((vw / c2).array().sqrt() + adam_eps)).matrix();
            m.b -= lr * (mb / c1) / (std::sqrt(vb / c2) + adam_eps);
        }
        return m;
    }

    Linear lo_, hi_;
};

}  // namespace autocp
