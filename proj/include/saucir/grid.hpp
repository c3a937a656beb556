#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace saucir {

/// Dense row-major square-or-rectangular matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix square(std::size_t n, double fill = 0.0) { return Matrix(n, n, fill); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense (day, row, col) tensor; every day slice is a rows x cols matrix.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t days, std::size_t rows, std::size_t cols, double fill = 0.0)
        : days_(days), rows_(rows), cols_(cols), data_(days * rows * cols, fill) {}

    std::size_t days() const { return days_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t t, std::size_t r, std::size_t c) {
        assert(t < days_ && r < rows_ && c < cols_);
        return data_[(t * rows_ + r) * cols_ + c];
    }
    double operator()(std::size_t t, std::size_t r, std::size_t c) const {
        assert(t < days_ && r < rows_ && c < cols_);
        return data_[(t * rows_ + r) * cols_ + c];
    }

    Matrix day(std::size_t t) const {
        Matrix out(rows_, cols_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                out(r, c) = (*this)(t, r, c);
            }
        }
        return out;
    }

    void set_day(std::size_t t, const Matrix& m) {
        assert(m.rows() == rows_ && m.cols() == cols_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                (*this)(t, r, c) = m(r, c);
            }
        }
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool operator==(const Tensor3&) const = default;

private:
    std::size_t days_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace saucir
