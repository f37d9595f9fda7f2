/*
 * Uniform periodic box grids and matrix-valued sampled fields.
 *
 * Axis a has N[a] points x_i = -L[a] + i * 2L[a]/N[a].  The dual axis has
 * half-width pi N/(2L) and spacing pi/L, so e^{i x xi} kernels close on it.
 * Field storage is entry-major: data[(r*cols + c)*npts + pt], points in
 * row-major order (axis 0 slowest).
 */
#pragma once

#include <array>
#include <complex>
#include <vector>

#include "rieffel/coeff_algebra.hpp"

namespace rieffel {

struct Grid {
    int n = 0;
    std::array<int, 4> N{};
    std::array<double, 4> L{};

    static Grid cube(int n, int N, double L);
    static Grid default_for(int n);

    long size() const;
    double spacing(int a) const { return 2.0 * L[a] / N[a]; }
    double coord(int a, int i) const { return -L[a] + i * spacing(a); }
    double cell() const;  // product of spacings
    Grid dual() const;
    // Concatenate axes: (x-grid, dual) for phase space.
    Grid product(const Grid& other) const;
    bool same_as(const Grid& o, double tol = 1e-12) const;
    bool is_cube() const;
    std::array<int, 4> index(long pt) const;
    long flat(const std::array<int, 4>& idx) const;
    std::vector<double> point(long pt) const;
};

void require_same(const Grid& a, const Grid& b, const char* where);

class Field {
public:
    Field() = default;
    Field(const Grid& g, int rows, int cols);

    const Grid& grid() const { return grid_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    long npts() const { return npts_; }
    long planes() const { return static_cast<long>(rows_) * cols_; }

    cplx* plane(int r, int c) { return data_.data() + (static_cast<long>(r) * cols_ + c) * npts_; }
    const cplx* plane(int r, int c) const {
        return data_.data() + (static_cast<long>(r) * cols_ + c) * npts_;
    }
    cplx* plane(long p) { return data_.data() + p * npts_; }
    const cplx* plane(long p) const { return data_.data() + p * npts_; }

    cplx& operator()(int r, int c, long pt) { return plane(r, c)[pt]; }
    cplx operator()(int r, int c, long pt) const { return plane(r, c)[pt]; }

    MatrixElement at(long pt) const;
    void set(long pt, const MatrixElement& m);

    std::vector<cplx>& raw() { return data_; }
    const std::vector<cplx>& raw() const { return data_; }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(cplx s);
    Field operator+(const Field& o) const;
    Field operator-(const Field& o) const;
    Field operator*(cplx s) const;

    // Pointwise left / right multiplication by a constant matrix.
    Field left_mul(const MatrixElement& c) const;
    Field right_mul(const MatrixElement& c) const;
    Field adjoint_pointwise() const;

    double sup_norm() const;         // max over points of the operator norm
    double max_abs() const;          // max entry magnitude
    double l2_norm() const;          // sqrt(cell * sum |entries|^2)

    Field with_grid(const Grid& g) const;  // relabel geometry, same samples

private:
    Grid grid_;
    int rows_ = 0, cols_ = 0;
    long npts_ = 0;
    std::vector<cplx> data_;
};

// Matrix-valued function sampled on a grid.
Field sample(const Grid& g, int rows, int cols,
             const std::function<MatrixElement(const std::vector<double>&)>& f);

// In-place unnormalized FFT over all grid axes of every plane.
// sign = +1 uses e^{-2 pi i jk/N}, sign = -1 uses e^{+2 pi i jk/N}.
void fft_planes(Field& f, int sign);

// Same, over the first `count` axes only.
void fft_leading_axes(Field& f, int count, int sign);

// Angular-frequency unitary transform x-grid -> dual grid (sign +1) or its
// inverse dual -> x-grid (sign -1).
Field fourier_transform(const Field& f, int sign);

// Trigonometric-interpolant coefficients: f(x) = sum_m c_m e^{i pi m.x/L},
// c_m stored at the FFT index of m.  from_mode_coefficients inverts.
Field mode_coefficients(const Field& f);
Field from_mode_coefficients(const Field& c);

// Signed integer frequency for FFT index j on an axis of N points.
inline int fft_freq(int j, int N) { return j < N / 2 ? j : j - N; }

}  // namespace rieffel
