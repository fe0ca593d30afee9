#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace osda {

/// Dense row-major matrix of 64-bit floats. The single numeric carrier for
/// feature batches (one instance per row), layer parameters and gradients.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix from_row(std::span<const double> row);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a(r,k) * b(k,c)
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a' * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b'
Matrix transpose(const Matrix& a);

void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);
void add_row_broadcast(Matrix& a, std::span<const double> row);  // every row of a += row
Matrix column_sums(const Matrix& a);                             // 1 x cols

/// New matrix holding the given rows of `a`, in order. Indices may repeat.
Matrix take_rows(const Matrix& a, std::span<const std::size_t> indices);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace osda
