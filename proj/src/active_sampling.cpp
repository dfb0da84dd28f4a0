#include "mcid/active_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mcid/errors.hpp"
#include "mcid/rng.hpp"
#include "mcid/vecops.hpp"

namespace mcid {

void ActiveSetSpec::validate() const {
    if (!(b > 0.0)) throw ArgumentError("active-set half-width b must be positive");
}

double ActiveSetSpec::half_width() const {
    double sq = 0.0;
    for (double t : theta_ref) sq += t * t;
    return b * std::sqrt(1.0 + sq);
}

bool active_set_member(double x, std::span<const double> z, const ActiveSetSpec& spec) {
    if (z.size() != spec.theta_ref.size()) throw ArgumentError("active_set_member: dimension mismatch");
    const double r = x - vecops::active().dot(spec.theta_ref.data(), z.data(), z.size());
    return std::abs(r) <= spec.half_width();
}

double normalized_margin(double x, std::span<const double> z, std::span<const double> theta) {
    if (z.size() != theta.size()) throw ArgumentError("normalized_margin: dimension mismatch");
    double sq = 0.0;
    for (double t : theta) sq += t * t;
    return std::abs(x - vecops::active().dot(theta.data(), z.data(), z.size())) / std::sqrt(1.0 + sq);
}

double estimate_inclusion_prob(const UnlabeledPool& pool, std::span<const std::size_t> rows, const ActiveSetSpec& spec) {
    spec.validate();
    if (rows.empty()) throw ArgumentError("estimate_inclusion_prob: empty estimation slice");
    std::size_t inside = 0;
    for (std::size_t r : rows) inside += active_set_member(pool.x[r], pool.z.row(r), spec) ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(rows.size());
}

double estimate_inclusion_prob(const UnlabeledPool& pool, const ActiveSetSpec& spec) {
    std::vector<std::size_t> rows(pool.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return estimate_inclusion_prob(pool, rows, spec);
}

SamplingRate sampling_rate(double budget_k, std::size_t n_batch, double p_hat) {
    if (!(budget_k > 0.0)) throw ArgumentError("sampling_rate: per-iteration budget must be positive");
    if (n_batch == 0) throw ArgumentError("sampling_rate: batch must be non-empty");
    if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw ArgumentError("sampling_rate: p_hat must lie in [0, 1]");
    if (p_hat == 0.0) {
        throw SamplingDegenerateError("active set is empty on the estimation slice (p_hat = 0)");
    }
    const double raw = budget_k / (static_cast<double>(n_batch) * p_hat);
    return raw >= 1.0 ? SamplingRate{1.0, raw > 1.0} : SamplingRate{raw, false};
}

std::shared_ptr<const LabelSource> LabelSource::sealed(std::vector<std::int8_t> labels) {
    for (auto v : labels) {
        if (v != 1 && v != -1) throw ArgumentError("sealed labels must all be -1 or +1");
    }
    return std::shared_ptr<const LabelSource>(new LabelSource(std::move(labels)));
}

std::shared_ptr<const LabelSource> LabelSource::with_missing(std::vector<std::int8_t> labels) {
    for (auto v : labels) {
        if (v != 1 && v != -1 && v != 0) throw ArgumentError("labels must be -1, +1 or missing");
    }
    return std::shared_ptr<const LabelSource>(new LabelSource(std::move(labels)));
}

std::size_t LabelSource::count_available() const {
    return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](auto v) { return v != 0; }));
}

LabelOracle::LabelOracle(std::shared_ptr<const LabelSource> source, double budget)
    : source_(std::move(source)), budget_(budget) {
    if (!source_) throw ArgumentError("LabelOracle needs a label source");
    if (!(budget > 0.0)) throw ArgumentError("label budget must be positive");
    ceiling_ = static_cast<std::size_t>(std::floor(2.0 * budget));
}

int LabelOracle::request(std::size_t row, int iteration) {
    std::lock_guard lock(mu_);
    if (row >= source_->labels_.size()) throw ArgumentError("label request for row outside the pool");
    if (auto it = revealed_.find(row); it != revealed_.end()) return it->second;
    if (issued_ >= ceiling_) {
        throw BudgetError("label budget ceiling of " + std::to_string(ceiling_) + " labels exhausted", iteration);
    }
    const std::int8_t y = source_->labels_[row];
    if (y == 0) throw BudgetError("label for row " + std::to_string(row) + " is missing", iteration);
    ++issued_;
    revealed_.emplace(row, y);
    return y;
}

std::size_t LabelOracle::labels_issued() const {
    std::lock_guard lock(mu_);
    return issued_;
}

std::size_t LabelOracle::budget_remaining() const {
    std::lock_guard lock(mu_);
    return ceiling_ - issued_;
}

LabeledBatch draw_and_label(const UnlabeledPool& pool, const DrawRequest& req, LabelOracle& oracle) {
    if (!(req.c > 0.0 && req.c <= 1.0)) throw ArgumentError("draw_and_label: rate c must lie in (0, 1]");
    if (req.spec != nullptr) req.spec->validate();
    const std::size_t total = req.batch_size_total.value_or(req.rows.size());
    LabeledBatch batch = LabeledBatch::empty_over(pool.dim(), std::max<std::size_t>(total, 1));
    for (std::size_t r : req.rows) {
        if (r >= pool.size()) throw ArgumentError("draw_and_label: row outside the pool");
        if (req.spec != nullptr && !active_set_member(pool.x[r], pool.z.row(r), *req.spec)) continue;
        if (uniform_at(req.stream_key, r) >= req.c) continue;
        const int y = oracle.request(r, req.iteration);
        batch.push_back(pool.x[r], pool.z.row(r), y, r);
    }
    return batch;
}

std::vector<std::vector<std::size_t>> split_pool(std::size_t n, std::span<const double> fractions,
                                                 std::uint64_t seed, std::uint64_t stream_id) {
    if (fractions.empty()) throw ArgumentError("split_pool: no fractions given");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw ArgumentError("split_pool: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("split_pool: fractions must sum to one");
    Stream stream(seed, StreamTag::split, {stream_id});
    const auto perm = random_permutation(n, stream);
    std::vector<std::vector<std::size_t>> out;
    std::size_t start = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        const std::size_t len = k + 1 == fractions.size()
                                    ? n - start
                                    : std::min(n - start, static_cast<std::size_t>(std::floor(fractions[k] * n)));
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(start + len));
        start += len;
    }
    return out;
}

}  // namespace mcid
