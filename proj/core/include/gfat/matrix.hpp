#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gfat {

// Dense float64 row-major matrix. Host/oracle side representation.
class Matrix64 {
  public:
    Matrix64() = default;
    Matrix64(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

    bool operator==(const Matrix64&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Matrix file format: little-endian binary, magic "GFAT", u32 rows, u32 cols,
// then rows*cols float32 row-major.
Matrix64 read_matrix_file(const std::string& path);
void write_matrix_file(const std::string& path, const Matrix64& m);

}  // namespace gfat
