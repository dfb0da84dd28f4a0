#include "mcid/surrogate_risk.hpp"

#include <algorithm>
#include <cmath>

#include "mcid/errors.hpp"
#include "mcid/vecops.hpp"

namespace mcid {
namespace {

void check_theta(std::span<const double> theta, const LabeledBatch& batch) {
    if (theta.size() != batch.dim()) {
        throw ArgumentError("theta has dimension " + std::to_string(theta.size()) + " but batch has dimension " +
                            std::to_string(batch.dim()));
    }
}

void check_delta(double delta) {
    if (!(delta > 0.0)) throw ArgumentError("bandwidth delta must be positive");
}

// log(1 + exp(-u)) without overflow.
inline double softplus_neg(double u) {
    return u > 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
}

// 1 / (1 + exp(u)).
inline double sigmoid_neg(double u) {
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
}

void compute_margins(std::span<const double> theta, const LabeledBatch& batch, std::vector<double>& margins) {
    margins.resize(batch.size());
    if (batch.empty()) return;
    vecops::active().residual_gemv(batch.z.data(), batch.size(), batch.dim(), theta.data(), batch.x.data(),
                                   margins.data());
}

}  // namespace

ClassWeights ClassWeights::from_probability(double p) {
    const double clamped = std::clamp(p, kClassProbFloor, kClassProbCeil);
    return {1.0 / clamped, 1.0 / (1.0 - clamped)};
}

ClassWeights class_weights_from(const LabeledBatch& batch) {
    if (batch.empty()) throw ArgumentError("cannot estimate class weights from an empty batch");
    const auto positives = std::count(batch.y.begin(), batch.y.end(), std::int8_t{1});
    return ClassWeights::from_probability(static_cast<double>(positives) / static_cast<double>(batch.size()));
}

SmoothedRiskLoss::SmoothedRiskLoss(const LabeledBatch& batch, double delta, KernelSpec kernel, ClassWeights weights)
    : batch_(&batch), delta_(delta), kernel_(std::move(kernel)), weights_(weights) {
    check_delta(delta);
}

double SmoothedRiskLoss::value(std::span<const double> theta) const {
    check_theta(theta, *batch_);
    compute_margins(theta, *batch_, margins_);
    const double inv_delta = 1.0 / delta_;
    double total = 0.0;
    for (std::size_t i = 0; i < batch_->size(); ++i) {
        const int y = batch_->y[i];
        total += weights_(y) * kernel_.upper_tail(y * margins_[i] * inv_delta);
    }
    return batch_->scale * total;
}

double SmoothedRiskLoss::value_and_gradient(std::span<const double> theta, std::span<double> grad) const {
    check_theta(theta, *batch_);
    if (grad.size() != theta.size()) throw ArgumentError("gradient buffer has the wrong dimension");
    compute_margins(theta, *batch_, margins_);
    const std::size_t m = batch_->size();
    coef_.resize(m);
    const double inv_delta = 1.0 / delta_;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int y = batch_->y[i];
        const double g = weights_(y);
        const double t = y * margins_[i] * inv_delta;
        total += g * kernel_.upper_tail(t);
        coef_[i] = batch_->scale * g * y * kernel_.density(t) * inv_delta;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    if (m > 0) vecops::active().gemv_t(batch_->z.data(), m, batch_->dim(), coef_.data(), grad.data());
    return batch_->scale * total;
}

LogisticLoss::LogisticLoss(const LabeledBatch& batch, ClassWeights weights) : batch_(&batch), weights_(weights) {}

double LogisticLoss::value(std::span<const double> theta) const {
    check_theta(theta, *batch_);
    compute_margins(theta, *batch_, margins_);
    double total = 0.0;
    for (std::size_t i = 0; i < batch_->size(); ++i) {
        const int y = batch_->y[i];
        total += weights_(y) * softplus_neg(y * margins_[i]);
    }
    return batch_->scale * total;
}

double LogisticLoss::value_and_gradient(std::span<const double> theta, std::span<double> grad) const {
    check_theta(theta, *batch_);
    if (grad.size() != theta.size()) throw ArgumentError("gradient buffer has the wrong dimension");
    compute_margins(theta, *batch_, margins_);
    const std::size_t m = batch_->size();
    coef_.resize(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int y = batch_->y[i];
        const double g = weights_(y);
        const double u = y * margins_[i];
        total += g * softplus_neg(u);
        // d/dtheta log(1 + e^{-u}) = sigma(-u) * y z  since du/dtheta = -y z
        coef_[i] = batch_->scale * g * y * sigmoid_neg(u);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    if (m > 0) vecops::active().gemv_t(batch_->z.data(), m, batch_->dim(), coef_.data(), grad.data());
    return batch_->scale * total;
}

double smoothed_risk(std::span<const double> theta, const LabeledBatch& batch, double delta,
                     const KernelSpec& kernel, const ClassWeights& weights) {
    return SmoothedRiskLoss(batch, delta, kernel, weights).value(theta);
}

std::vector<double> smoothed_risk_gradient(std::span<const double> theta, const LabeledBatch& batch, double delta,
                                           const KernelSpec& kernel, const ClassWeights& weights) {
    std::vector<double> grad(theta.size());
    SmoothedRiskLoss(batch, delta, kernel, weights).value_and_gradient(theta, grad);
    return grad;
}

std::pair<double, std::vector<double>> logistic_loss_and_gradient(std::span<const double> theta,
                                                                  const LabeledBatch& batch,
                                                                  const ClassWeights& weights) {
    std::vector<double> grad(theta.size());
    const double v = LogisticLoss(batch, weights).value_and_gradient(theta, grad);
    return {v, std::move(grad)};
}

std::unique_ptr<SmoothLoss> LossSpec::make(const LabeledBatch& batch) const {
    if (type == LossType::logistic) return std::make_unique<LogisticLoss>(batch, weights);
    return std::make_unique<SmoothedRiskLoss>(batch, delta, kernel, weights);
}

double LossSpec::mean_loss(std::span<const double> theta, const LabeledBatch& batch) const {
    check_theta(theta, batch);
    if (batch.empty()) return 0.0;
    std::vector<double> margins;
    compute_margins(theta, batch, margins);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const int y = batch.y[i];
        const double u = y * margins[i];
        total += weights(y) * (type == LossType::logistic ? softplus_neg(u) : kernel.upper_tail(u / delta));
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace mcid
