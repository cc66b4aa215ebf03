#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fbk/error.hpp"

namespace fbk::seg {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// One row per utterance, all rows the same width, all entries finite.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
        if (!rows_.empty()) dim_ = rows_.front().size();
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].size() != dim_) {
                throw DimensionMismatch("embedding row " + std::to_string(r) + " has dimension " +
                                        std::to_string(rows_[r].size()) + ", expected " + std::to_string(dim_));
            }
            for (double v : rows_[r]) {
                if (!std::isfinite(v)) throw DataError("embedding row " + std::to_string(r) + " has a non-finite entry");
            }
        }
    }

    std::size_t size() const noexcept { return rows_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<double>& row(std::size_t r) const { return rows_.at(r); }

private:
    std::vector<std::vector<double>> rows_;
    std::size_t dim_ = 0;
};

}  // namespace fbk::seg
