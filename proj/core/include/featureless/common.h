#ifndef FEATURELESS_COMMON_H_
#define FEATURELESS_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace featureless {

// All library failures surface as this exception; the message is meant for
// end users and is matched verbatim by the CLI tests.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major matrix of doubles. Rows are samples, columns dimensions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  // Appends a row; the first appended row fixes the column count of an
  // empty matrix.
  void append_row(std::span<const double> values);

  // New matrix holding the listed rows (duplicates allowed).
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  // New matrix holding the listed columns, in the listed order.
  Matrix gather_cols(std::span<const int> columns) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// SplitMix64 finalizer; used to derive independent per-stage seeds from a
// single user seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Index of the largest element; first index wins ties.
std::size_t argmax(std::span<const double> values);

}  // namespace featureless

#endif  // FEATURELESS_COMMON_H_
