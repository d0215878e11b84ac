#include "explab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "explab/error.hpp"

namespace explab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw ShapeError("ragged initializer for matrix");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
}

void Matrix::reshape(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) {
            throw ShapeError("row index " + std::to_string(indices[i]) + " out of range");
        }
        std::copy_n(data_.data() + indices[i] * cols_, cols_, out.data() + i * cols_);
    }
    return out;
}

std::vector<double> Matrix::column(std::size_t c) const {
    if (c >= cols_) {
        throw ShapeError("column index " + std::to_string(c) + " out of range");
    }
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix append_column(const Matrix& features, std::span<const double> column) {
    if (features.rows() != column.size()) {
        throw ShapeError("cannot append column of length " + std::to_string(column.size()) +
                         " to matrix with " + std::to_string(features.rows()) + " rows");
    }
    const std::size_t m = features.cols();
    Matrix out(features.rows(), m + 1);
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto src = features.row(r);
        auto dst = out.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        dst[m] = column[r];
    }
    return out;
}

} // namespace explab
