#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothcop {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// n x d matrix of pseudo-observations, entries in [0, 1], row-major.
class Sample {
  public:
    Sample(std::size_t n, std::size_t d);
    Sample(std::size_t n, std::size_t d, std::vector<double> data);

    std::size_t rows() const { return n_; }
    std::size_t dim() const { return d_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * d_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * d_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * d_, d_};
    }
    std::vector<double> column(std::size_t j) const;

    // CSV with header u1,...,ud, one observation per row.
    static Sample read_csv(const std::string& path);
    static Sample read_csv(std::istream& in);
    void write_csv(const std::string& path) const;
    void write_csv(std::ostream& out) const;

  private:
    std::size_t n_, d_;
    std::vector<double> data_;
};

// Columnwise ranks R_ij = #{k : X_kj <= X_ij}; each column is a permutation
// of 1..n. Row-major storage.
class RankMatrix {
  public:
    RankMatrix(std::size_t n, std::size_t d);

    std::size_t rows() const { return n_; }
    std::size_t dim() const { return d_; }

    std::int64_t operator()(std::size_t i, std::size_t j) const { return r_[i * d_ + j]; }
    std::int64_t& operator()(std::size_t i, std::size_t j) { return r_[i * d_ + j]; }

  private:
    std::size_t n_, d_;
    std::vector<std::int64_t> r_;
};

// Throws std::invalid_argument naming the offending column if any column
// contains ties.
RankMatrix compute_ranks(const Sample& sample);

}  // namespace smoothcop
