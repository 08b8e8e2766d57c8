#include "smoothcop/sample.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace smoothcop {

namespace {

void check_entry(double v) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("Sample: entries must lie in [0, 1]");
}

}  // namespace

Sample::Sample(std::size_t n, std::size_t d) : n_(n), d_(d), data_(n * d, 0.0) {
    if (n == 0 || d == 0) throw std::invalid_argument("Sample: n and d must be positive");
}

Sample::Sample(std::size_t n, std::size_t d, std::vector<double> data)
    : n_(n), d_(d), data_(std::move(data)) {
    if (n == 0 || d == 0) throw std::invalid_argument("Sample: n and d must be positive");
    if (data_.size() != n * d) throw std::invalid_argument("Sample: data size mismatch");
    for (double v : data_) check_entry(v);
}

std::vector<double> Sample::column(std::size_t j) const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = data_[i * d_ + j];
    return out;
}

Sample Sample::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw io_error("Sample: empty CSV input");
    std::size_t d = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    std::vector<double> data;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::size_t got = 0;
        while (std::getline(row, cell, ',')) {
            double v = 0.0;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw io_error("Sample: malformed CSV cell '" + cell + "'");
            }
            check_entry(v);
            data.push_back(v);
            ++got;
        }
        if (got != d) throw io_error("Sample: inconsistent CSV column count");
        ++n;
    }
    if (n == 0) throw io_error("Sample: CSV has no data rows");
    return Sample(n, d, std::move(data));
}

Sample Sample::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("Sample: cannot open '" + path + "'");
    return read_csv(in);
}

void Sample::write_csv(std::ostream& out) const {
    for (std::size_t j = 0; j < d_; ++j) out << (j ? ",u" : "u") << (j + 1);
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < d_; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data_[i * d_ + j]);
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

void Sample::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw io_error("Sample: cannot write '" + path + "'");
    write_csv(out);
}

RankMatrix::RankMatrix(std::size_t n, std::size_t d) : n_(n), d_(d), r_(n * d, 0) {
    if (n == 0 || d == 0) throw std::invalid_argument("RankMatrix: n and d must be positive");
}

RankMatrix compute_ranks(const Sample& sample) {
    const std::size_t n = sample.rows(), d = sample.dim();
    RankMatrix ranks(n, d);
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sample(a, j) < sample(b, j);
        });
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            if (sample(order[pos], j) == sample(order[pos + 1], j))
                throw std::invalid_argument("compute_ranks: ties in column " +
                                            std::to_string(j + 1));
        }
        for (std::size_t pos = 0; pos < n; ++pos)
            ranks(order[pos], j) = static_cast<std::int64_t>(pos + 1);
    }
    return ranks;
}

}  // namespace smoothcop
