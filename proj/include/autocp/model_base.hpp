#pragma once

#include "autocp/common.hpp"

#include <memory>
#include <string>
#include <utility>

namespace autocp {

enum class ModelId { kRidge, kForest, kMlp };

inline const char* to_string(ModelId id) {
    switch (id) {
        case ModelId::kRidge: return "ridge";
        case ModelId::kForest: return "forest";
        case ModelId::kMlp: return "mlp";
    }
    return "?";
}

inline ModelId model_id_from_string(const std::string& s) {
    if (s == "ridge") return ModelId::kRidge;
    if (s == "forest") return ModelId::kForest;
    if (s == "mlp") return ModelId::kMlp;
    throw ConfigError("unknown model id: " + s);
}

struct RidgeParams {
    double lambda = 1.0;
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 10;
    int min_leaf = 3;
    double feature_frac = 0.7;
};

struct MlpParams {
    int hidden = 32;
    int layers = 2;
    double learning_rate = 1e-2;
    int epochs = 200;
    double weight_decay = 1e-4;
};

struct ModelHyperparams {
    ModelId model_id = ModelId::kRidge;
    RidgeParams ridge;
    ForestParams forest;
    MlpParams mlp;
};

enum class Head { kMean, kMad, kQuantile };

// Lower clamp applied to every fitted spread estimate so that normalized
// residual scores stay finite.
inline constexpr double kSigmaFloor = 1e-6;

// A point-prediction head: conditional mean, or conditional mean absolute
// deviation when used as a spread model.
class MeanRegressor {
public:
    virtual ~MeanRegressor() = default;
    virtual Vector predict(const Matrix& X) const = 0;
};

// A lower/upper conditional quantile pair.
class QuantileModel {
public:
    virtual ~QuantileModel() = default;
    virtual std::pair<Vector, Vector> predict(const Matrix& X) const = 0;
};

// Floors the wrapped regressor's predictions at kSigmaFloor.
class ClampedRegressor : public MeanRegressor {
public:
    explicit ClampedRegressor(std::shared_ptr<const MeanRegressor> inner) : inner_(std::move(inner)) {}
    Vector predict(const Matrix& X) const override {
        Vector v = inner_->predict(X);
        return v.cwiseMax(kSigmaFloor);
    }

private:
    std::shared_ptr<const MeanRegressor> inner_;
};

// A fitted base learner with whatever heads have been trained so far.
// Immutable; adding a head produces a new value. Predictions through an
// absent head are rejected.
class FittedModel {
public:
    FittedModel() = default;
    FittedModel(ModelId id, std::shared_ptr<const MeanRegressor> mean,
                std::shared_ptr<const MeanRegressor> mad = nullptr,
                std::shared_ptr<const QuantileModel> quantile = nullptr)
        : id_(id), mean_(std::move(mean)), mad_(std::move(mad)), quantile_(std::move(quantile)) {}

    ModelId id() const { return id_; }

    bool has(Head h) const {
        switch (h) {
            case Head::kMean: return mean_ != nullptr;
            case Head::kMad: return mad_ != nullptr;
            case Head::kQuantile: return quantile_ != nullptr;
        }
        return false;
    }

    Vector predict_mean(const Matrix& X) const {
        check_input(X, Head::kMean);
        return mean_->predict(X);
    }

    Vector predict_mad(const Matrix& X) const {
        check_input(X, Head::kMad);
        return mad_->predict(X);
    }

    // Returns (lower, upper); crossings are resolved by a pointwise swap.
    std::pair<Vector, Vector> predict_quantiles(const Matrix& X) const {
        check_input(X, Head::kQuantile);
        auto [lo, hi] = quantile_->predict(X);
        for (Index i = 0; i < lo.size(); ++i) {
            if (lo[i] > hi[i]) std::swap(lo[i], hi[i]);
        }
        return {lo, hi};
    }

    FittedModel with_mad(std::shared_ptr<const MeanRegressor> mad) const {
        FittedModel out = *this;
        out.mad_ = std::move(mad);
        return out;
    }

private:
    void check_input(const Matrix& X, Head h) const {
        if (!has(h)) throw Error("model head not fitted");
        if (!X.allFinite()) throw Error("non-finite model input");
    }

    ModelId id_ = ModelId::kRidge;
    std::shared_ptr<const MeanRegressor> mean_;
    std::shared_ptr<const MeanRegressor> mad_;
    std::shared_ptr<const QuantileModel> quantile_;
};

}  // namespace autocp
