#include "mcid/data.hpp"

#include <string>

#include "mcid/errors.hpp"

namespace mcid {

void UnlabeledPool::validate() const {
    if (z.rows != x.size()) {
        throw ArgumentError("pool has " + std::to_string(x.size()) + " x values but " + std::to_string(z.rows) +
                            " covariate rows");
    }
    if (z.values.size() != z.rows * z.cols) throw ArgumentError("pool covariate matrix has inconsistent storage");
}

LabeledBatch LabeledBatch::empty_over(std::size_t d, std::size_t total) {
    if (total == 0) throw ArgumentError("batch_size_total must be positive");
    LabeledBatch b;
    b.z = Matrix(0, d);
    b.batch_size_total = total;
    b.scale = 1.0 / static_cast<double>(total);
    return b;
}

void LabeledBatch::push_back(double xi, std::span<const double> zi, int yi, std::size_t source_row) {
    if (yi != 1 && yi != -1) throw ArgumentError("labels must be -1 or +1, got " + std::to_string(yi));
    if (zi.size() != z.cols) throw ArgumentError("record dimension does not match batch dimension");
    x.push_back(xi);
    z.values.insert(z.values.end(), zi.begin(), zi.end());
    ++z.rows;
    y.push_back(static_cast<std::int8_t>(yi));
    source_rows.push_back(source_row);
}

LabeledBatch LabeledBatch::subset(std::span<const std::size_t> rows, std::size_t new_total) const {
    LabeledBatch out = empty_over(dim(), new_total);
    out.x.reserve(rows.size());
    out.z.values.reserve(rows.size() * dim());
    for (std::size_t r : rows) {
        if (r >= size()) throw ArgumentError("subset row out of range");
        out.push_back(x[r], z.row(r), y[r], source_rows[r]);
    }
    return out;
}

void LabeledBatch::validate() const {
    if (x.size() != y.size() || z.rows != y.size() || source_rows.size() != y.size()) {
        throw ArgumentError("labeled batch columns have inconsistent lengths");
    }
    if (y.size() > batch_size_total) throw ArgumentError("labeled batch holds more records than its slice");
    if (!(scale > 0.0)) throw ArgumentError("batch scale must be positive");
    for (auto v : y) {
        if (v != 1 && v != -1) throw ArgumentError("labels must be -1 or +1");
    }
}

}  // namespace mcid
