#pragma once

// Active-set construction, inclusion-probability estimation, Bernoulli
// selection and label accounting. Selection only ever looks at (x, z), the
// active-set spec and the random stream; labels come exclusively from a
// LabelOracle, which charges the budget.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mcid/data.hpp"

namespace mcid {

/// Band |x - theta_ref^T z| <= b * sqrt(1 + ||theta_ref||_2^2).
struct ActiveSetSpec {
    std::vector<double> theta_ref;
    double b = 1.0;

    /// Throws ArgumentError when b <= 0.
    void validate() const;
    /// b * sqrt(1 + ||theta_ref||^2)
    double half_width() const;
};

bool active_set_member(double x, std::span<const double> z, const ActiveSetSpec& spec);

/// |x - theta^T z| / sqrt(1 + ||theta||^2), the quantity the band thresholds at b.
double normalized_margin(double x, std::span<const double> z, std::span<const double> theta);

/// Fraction of rows of `pool` listed in `rows` that fall inside the band. Throws ArgumentError when empty.
double estimate_inclusion_prob(const UnlabeledPool& pool, std::span<const std::size_t> rows, const ActiveSetSpec& spec);
/// Same over every row of the pool.
double estimate_inclusion_prob(const UnlabeledPool& pool, const ActiveSetSpec& spec);

struct SamplingRate {
    double c = 1.0;
    bool clamped = false;
};

/// min(N_k / (n_batch * p_hat), 1). Throws SamplingDegenerateError when p_hat == 0.
SamplingRate sampling_rate(double budget_k, std::size_t n_batch, double p_hat);

/// Hidden labels; missing entries are stored as 0. Only LabelOracle can read them.
class LabelSource {
public:
    /// Every label must be -1 or +1.
    static std::shared_ptr<const LabelSource> sealed(std::vector<std::int8_t> labels);
    /// Labels may be 0 (missing); requesting a missing one raises BudgetError.
    static std::shared_ptr<const LabelSource> with_missing(std::vector<std::int8_t> labels);

    std::size_t size() const { return labels_.size(); }
    std::size_t count_available() const;

private:
    explicit LabelSource(std::vector<std::int8_t> labels) : labels_(std::move(labels)) {}
    friend class LabelOracle;
    std::vector<std::int8_t> labels_;
};

/// Reveals labels on request and charges a budget counter. Hard ceiling = floor(2N); the
/// expected spend of a well-configured run is N. Re-requesting an already revealed row is free.
class LabelOracle {
public:
    LabelOracle(std::shared_ptr<const LabelSource> source, double budget);

    int request(std::size_t row, int iteration = -1);

    double budget() const noexcept { return budget_; }
    std::size_t ceiling() const noexcept { return ceiling_; }
    std::size_t labels_issued() const;
    std::size_t budget_remaining() const;

private:
    std::shared_ptr<const LabelSource> source_;
    double budget_;
    std::size_t ceiling_;
    mutable std::mutex mu_;
    std::size_t issued_ = 0;
    std::unordered_map<std::size_t, std::int8_t> revealed_;
};

struct DrawRequest {
    std::span<const std::size_t> rows;          // the batch D_k as pool row ids
    const ActiveSetSpec* spec = nullptr;        // null: every row is eligible (uniform stage)
    double c = 1.0;                             // inclusion rate inside the band
    std::uint64_t stream_key = 0;               // per-row draws use uniform_at(stream_key, row)
    int iteration = -1;                         // reported in budget errors
    std::optional<std::size_t> batch_size_total; // defaults to rows.size()
};

/// R_i ~ Bernoulli(c * 1{row in band}); labels requested for R_i = 1 only.
LabeledBatch draw_and_label(const UnlabeledPool& pool, const DrawRequest& req, LabelOracle& oracle);

/// Random disjoint slices of 0..n-1 with sizes floor(f_k * n); the last slice takes the remainder.
std::vector<std::vector<std::size_t>> split_pool(std::size_t n, std::span<const double> fractions,
                                                 std::uint64_t seed, std::uint64_t stream_id = 0);

}  // namespace mcid
