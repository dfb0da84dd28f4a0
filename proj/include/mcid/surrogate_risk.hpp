#pragma once

// Weighted empirical risks over a labeled batch and the loss objects the
// solver consumes. For a record (x, z, y) the signed margin is
// u = y (x - theta^T z); the smoothed risk is
//
//     R(theta) = scale * sum_i gamma(y_i) L_delta(u_i)
//
// and its gradient is scale * sum_i gamma(y_i) (y_i z_i / delta) K(u_i / delta).

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mcid/data.hpp"
#include "mcid/kernels.hpp"

namespace mcid {

/// gamma(y) = 1/P(Y = y) from a clamped class-frequency estimate.
struct ClassWeights {
    double w_plus = 2.0;
    double w_minus = 2.0;

    double operator()(int y) const noexcept { return y > 0 ? w_plus : w_minus; }
    /// From P(Y=1) = p, clamped to [0.05, 0.95].
    static ClassWeights from_probability(double p);
};

inline constexpr double kClassProbFloor = 0.05;
inline constexpr double kClassProbCeil = 0.95;

/// Throws ArgumentError for an empty batch.
ClassWeights class_weights_from(const LabeledBatch& batch);

/// First-order loss oracle over a fixed batch.
class SmoothLoss {
public:
    virtual ~SmoothLoss() = default;
    virtual std::size_t dim() const = 0;
    virtual double value(std::span<const double> theta) const = 0;
    /// Returns the loss and writes the gradient into `grad` (size dim()).
    virtual double value_and_gradient(std::span<const double> theta, std::span<double> grad) const = 0;
};

class SmoothedRiskLoss final : public SmoothLoss {
public:
    SmoothedRiskLoss(const LabeledBatch& batch, double delta, KernelSpec kernel, ClassWeights weights);

    std::size_t dim() const override { return batch_->dim(); }
    double value(std::span<const double> theta) const override;
    double value_and_gradient(std::span<const double> theta, std::span<double> grad) const override;

private:
    const LabeledBatch* batch_;
    double delta_;
    KernelSpec kernel_;
    ClassWeights weights_;
    mutable std::vector<double> margins_;
    mutable std::vector<double> coef_;
};

/// scale * sum_i gamma(y_i) log(1 + exp(-u_i)), the logistic model with the X coefficient fixed at one.
class LogisticLoss final : public SmoothLoss {
public:
    LogisticLoss(const LabeledBatch& batch, ClassWeights weights);

    std::size_t dim() const override { return batch_->dim(); }
    double value(std::span<const double> theta) const override;
    double value_and_gradient(std::span<const double> theta, std::span<double> grad) const override;

private:
    const LabeledBatch* batch_;
    ClassWeights weights_;
    mutable std::vector<double> margins_;
    mutable std::vector<double> coef_;
};

double smoothed_risk(std::span<const double> theta, const LabeledBatch& batch, double delta,
                     const KernelSpec& kernel, const ClassWeights& weights);

std::vector<double> smoothed_risk_gradient(std::span<const double> theta, const LabeledBatch& batch, double delta,
                                           const KernelSpec& kernel, const ClassWeights& weights);

std::pair<double, std::vector<double>> logistic_loss_and_gradient(std::span<const double> theta,
                                                                  const LabeledBatch& batch,
                                                                  const ClassWeights& weights);

enum class LossType { smoothed, logistic };

/// Everything needed to build a loss over any batch and to score held-out records.
struct LossSpec {
    LossType type = LossType::smoothed;
    double delta = 1.0;
    KernelSpec kernel = KernelSpec::gaussian();
    ClassWeights weights;

    std::unique_ptr<SmoothLoss> make(const LabeledBatch& batch) const;
    /// Plain per-record average of the weighted loss (no batch scale), used for validation folds.
    double mean_loss(std::span<const double> theta, const LabeledBatch& batch) const;
};

}  // namespace mcid
