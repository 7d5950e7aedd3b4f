#pragma once

#include <vector>

#include "bmlr/error.hpp"

namespace bmlr {

/// Dense real matrix, row-major storage. Constructors taking entry data
/// reject non-finite values; in-place writes through operator() are the
/// caller's responsibility (the estimators use NaN deliberately to mark
/// guarded entries).
class RealMatrix {
public:
    RealMatrix() = default;  // empty placeholder, 0x0
    RealMatrix(int rows, int cols);
    RealMatrix(int rows, int cols, std::vector<double> entries);
    RealMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static RealMatrix identity(int dim);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

    RealMatrix transposed() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator+(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator*(double s, const RealMatrix& a);
bool operator==(const RealMatrix& a, const RealMatrix& b);

/// Flattened index convention for the mq x np coefficient matrix: the entry
/// for predictor cell (k, l) and response cell (i, j) lives at row k + l*m,
/// column i + j*n, all indices 0-based. (Equivalently k + (l-1)m and
/// i + (j-1)n in 1-based form.) Both maps are bijections.
struct FlatIndexMap {
    int m = 0;  // predictor rows
    int q = 0;  // predictor cols
    int n = 0;  // response rows
    int p = 0;  // response cols

    int row_index(int k, int l) const { return k + l * m; }
    int col_index(int i, int j) const { return i + j * n; }
    int rows() const { return m * q; }
    int cols() const { return n * p; }
};

/// Column-stacking vectorization: position r + c*rows holds entry (r, c).
std::vector<double> vectorize(const RealMatrix& m);

/// Inverse of vectorize. Throws DimensionError on length mismatch.
RealMatrix unvectorize(const std::vector<double>& v, int rows, int cols);

/// Kronecker product: block (i, j) of the result equals a(i,j) * b.
RealMatrix kronecker(const RealMatrix& a, const RealMatrix& b);

double frobenius_norm(const RealMatrix& m);
double frobenius_norm_sq(const RealMatrix& m);
double max_norm(const RealMatrix& m);

}  // namespace bmlr
