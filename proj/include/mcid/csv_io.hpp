#pragma once

// Dataset CSV with header x,z1,...,zd[,y]. An empty y cell (or no y column)
// marks a label that was never measured; it is stored as 0.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mcid/data.hpp"

namespace mcid {

struct Dataset {
    UnlabeledPool pool;
    std::vector<std::int8_t> y;   // -1, +1, or 0 when missing; empty when the file has no y column
    bool has_label_column = false;
};

/// Throws ArgumentError naming the line on malformed input.
Dataset read_dataset_csv(std::istream& is);
Dataset load_dataset_csv(const std::string& path);

void write_dataset_header(std::ostream& os, std::size_t d, bool with_labels);
/// One row; y is written only when with_labels, and 0 is written as an empty cell.
void write_dataset_row(std::ostream& os, double x, std::span<const double> z, int y, bool with_labels);

}  // namespace mcid
