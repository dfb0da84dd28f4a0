#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mcid {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    const double* data() const { return values.data(); }
};

/// Covariates (X, Z) for n records. Labels are never stored here; they sit behind a LabelOracle.
struct UnlabeledPool {
    std::vector<double> x;
    Matrix z;

    std::size_t size() const { return x.size(); }
    std::size_t dim() const { return z.cols; }
    /// Throws ArgumentError when x and z disagree on the number of rows.
    void validate() const;
};

/// Labeled records drawn from one batch D_k. Only selected rows are stored; the
/// risk over the batch is scale * sum over stored rows, with scale = 1/|D_k| by default.
struct LabeledBatch {
    std::vector<double> x;
    Matrix z;
    std::vector<std::int8_t> y;            // each entry is -1 or +1
    std::vector<std::size_t> source_rows;  // pool row of each record
    std::size_t batch_size_total = 1;      // |D_k|
    double scale = 1.0;                    // K/n in the risk normalisation

    std::size_t size() const { return y.size(); }
    std::size_t dim() const { return z.cols; }
    bool empty() const { return y.empty(); }

    /// Empty batch of dimension d over a slice of `total` rows.
    static LabeledBatch empty_over(std::size_t d, std::size_t total);
    /// Appends one record; throws ArgumentError on a bad label or dimension.
    void push_back(double xi, std::span<const double> zi, int yi, std::size_t source_row = 0);
    /// Records at `rows` (indices into this batch), re-normalised to `new_total` rows.
    LabeledBatch subset(std::span<const std::size_t> rows, std::size_t new_total) const;
    /// Throws ArgumentError when an invariant is broken.
    void validate() const;
};

}  // namespace mcid
