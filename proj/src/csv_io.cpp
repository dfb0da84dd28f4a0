#include "mcid/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mcid/errors.hpp"

namespace mcid {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return out;
}

std::string where(std::size_t lineno) { return "dataset CSV line " + std::to_string(lineno) + ": "; }

double parse_number(const std::string& s, std::size_t lineno) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
        throw ArgumentError(where(lineno) + "'" + s + "' is not a finite number");
    }
    return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ArgumentError("dataset CSV is empty");
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "x") throw ArgumentError(where(1) + "header must start with x");
    Dataset ds;
    ds.has_label_column = header.back() == "y";
    const std::size_t d = header.size() - 1 - (ds.has_label_column ? 1 : 0);
    if (d == 0) throw ArgumentError(where(1) + "no z columns");
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j + 1] != "z" + std::to_string(j + 1)) {
            throw ArgumentError(where(1) + "expected column z" + std::to_string(j + 1) + ", got '" + header[j + 1] + "'");
        }
    }

    std::vector<double> zvals;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_fields(line);
        if (f.size() != header.size()) {
            throw ArgumentError(where(lineno) + "expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(f.size()));
        }
        ds.pool.x.push_back(parse_number(f[0], lineno));
        for (std::size_t j = 0; j < d; ++j) zvals.push_back(parse_number(f[j + 1], lineno));
        if (ds.has_label_column) {
            const std::string& y = f.back();
            if (y.empty() || y == "NA") {
                ds.y.push_back(0);
            } else if (y == "1" || y == "+1") {
                ds.y.push_back(1);
            } else if (y == "-1") {
                ds.y.push_back(-1);
            } else {
                throw ArgumentError(where(lineno) + "label '" + y + "' is not -1, 1 or empty");
            }
        }
    }
    ds.pool.z.rows = ds.pool.x.size();
    ds.pool.z.cols = d;
    ds.pool.z.values = std::move(zvals);
    if (ds.pool.size() == 0) throw ArgumentError("dataset CSV has no rows");
    return ds;
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open dataset '" + path + "'");
    return read_dataset_csv(in);
}

void write_dataset_header(std::ostream& os, std::size_t d, bool with_labels) {
    os << 'x';
    for (std::size_t j = 1; j <= d; ++j) os << ",z" << j;
    if (with_labels) os << ",y";
    os << '\n';
}

void write_dataset_row(std::ostream& os, double x, std::span<const double> z, int y, bool with_labels) {
    char buf[32];
    auto put = [&](double v) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, p - buf);
    };
    put(x);
    for (double v : z) {
        os << ',';
        put(v);
    }
    if (with_labels) {
        os << ',';
        if (y != 0) os << y;
    }
    os << '\n';
}

}  // namespace mcid
