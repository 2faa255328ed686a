#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rib {

// Dense row-major 2-D array of doubles. The only numeric container used
// for batches, weights and gradients.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix row(std::size_t r) const {
        Matrix out(1, cols);
        for (std::size_t c = 0; c < cols; ++c) out(0, c) = (*this)(r, c);
        return out;
    }
};

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const std::string& what) {
    if (m.rows != rows || m.cols != cols) {
        throw std::invalid_argument(what + ": expected " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + ", got " + std::to_string(m.rows) +
                                    "x" + std::to_string(m.cols));
    }
}

}  // namespace rib
