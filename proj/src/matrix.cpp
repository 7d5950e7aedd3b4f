#include "bmlr/matrix.hpp"

#include <cmath>
#include <string>

namespace bmlr {

namespace {

void check_shape(int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw DimensionError("matrix dims must be >= 1, got " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

void check_finite(const std::vector<double>& entries) {
    for (double v : entries) {
        if (!std::isfinite(v)) {
            throw DimensionError("matrix entries must be finite");
        }
    }
}

}  // namespace

RealMatrix::RealMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    data_.assign(static_cast<size_t>(rows) * cols, 0.0);
}

RealMatrix::RealMatrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    check_shape(rows, cols);
    if (data_.size() != static_cast<size_t>(rows) * cols) {
        throw DimensionError("entry count does not match dims");
    }
    check_finite(data_);
}

RealMatrix::RealMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    check_shape(rows_, cols_);
    data_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != cols_) {
            throw DimensionError("ragged initializer rows");
        }
        data_.insert(data_.end(), row.begin(), row.end());
    }
    check_finite(data_);
}

RealMatrix RealMatrix::identity(int dim) {
    RealMatrix out(dim, dim);
    for (int i = 0; i < dim; ++i) out(i, i) = 1.0;
    return out;
}

bool RealMatrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

RealMatrix RealMatrix::transposed() const {
    RealMatrix out(cols_, rows_);
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    }
    return out;
}

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("product dims mismatch: " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
    RealMatrix out(a.rows(), b.cols());
    // i-k-j loop order keeps the inner access contiguous in row-major storage.
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("sum dims mismatch");
    RealMatrix out = a;
    for (size_t idx = 0; idx < out.data().size(); ++idx) out.data()[idx] += b.data()[idx];
    return out;
}

RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("difference dims mismatch");
    RealMatrix out = a;
    for (size_t idx = 0; idx < out.data().size(); ++idx) out.data()[idx] -= b.data()[idx];
    return out;
}

RealMatrix operator*(double s, const RealMatrix& a) {
    RealMatrix out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

bool operator==(const RealMatrix& a, const RealMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.data() == b.data();
}

std::vector<double> vectorize(const RealMatrix& m) {
    std::vector<double> out(static_cast<size_t>(m.rows()) * m.cols());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) {
            out[static_cast<size_t>(c) * m.rows() + r] = m(r, c);
        }
    }
    return out;
}

RealMatrix unvectorize(const std::vector<double>& v, int rows, int cols) {
    if (v.size() != static_cast<size_t>(rows) * cols) {
        throw DimensionError("unvectorize: length " + std::to_string(v.size()) +
                             " does not equal " + std::to_string(rows) + "*" + std::to_string(cols));
    }
    RealMatrix out(rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            out(r, c) = v[static_cast<size_t>(c) * rows + r];
        }
    }
    return out;
}

RealMatrix kronecker(const RealMatrix& a, const RealMatrix& b) {
    RealMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            for (int r = 0; r < b.rows(); ++r) {
                for (int c = 0; c < b.cols(); ++c) {
                    out(i * b.rows() + r, j * b.cols() + c) = aij * b(r, c);
                }
            }
        }
    }
    return out;
}

double frobenius_norm_sq(const RealMatrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return s;
}

double frobenius_norm(const RealMatrix& m) { return std::sqrt(frobenius_norm_sq(m)); }

double max_norm(const RealMatrix& m) {
    double s = 0.0;
    for (double v : m.data()) s = std::max(s, std::fabs(v));
    return s;
}

}  // namespace bmlr
