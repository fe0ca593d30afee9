#include "osda/matrix.hpp"

#include <cmath>
#include <string>

#include "osda/errors.hpp"

namespace osda {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix out;
    out.rows_ = rows.size();
    out.cols_ = rows.size() ? rows.begin()->size() : 0;
    out.data_.reserve(out.rows_ * out.cols_);
    for (const auto& r : rows) {
        if (r.size() != out.cols_) throw input_error("Matrix::from_rows: ragged rows");
        out.data_.insert(out.data_.end(), r.begin(), r.end());
    }
    return out;
}

Matrix Matrix::from_row(std::span<const double> row) {
    Matrix out(1, row.size());
    std::copy(row.begin(), row.end(), out.data_.begin());
    return out;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {
void check_inner(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw input_error(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
    }
}
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.rows(), "matmul");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto brow = b.row(k);
            auto orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_inner(a.rows(), b.rows(), "matmul_tn");
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const auto arow = a.row(k);
        const auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            auto orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_inner(a.cols(), b.cols(), "matmul_nt");
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            out(i, j) = s;
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw input_error("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

void scale_inplace(Matrix& a, double s) {
    for (double& v : a.data()) v *= s;
}

void add_row_broadcast(Matrix& a, std::span<const double> row) {
    check_inner(a.cols(), row.size(), "add_row_broadcast");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) arow[j] += row[j];
    }
}

Matrix column_sums(const Matrix& a) {
    Matrix out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += arow[j];
    }
    return out;
}

Matrix take_rows(const Matrix& a, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), a.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.rows()) throw input_error("take_rows: row index out of range");
        const auto src = a.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    check_inner(a.size(), b.size(), "squared_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace osda
