#include "rieffel/grid.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <fftw3.h>

namespace rieffel {

Grid Grid::cube(int n, int N, double L) {
    if (n < 1 || n > 4) throw GridMismatchError("grid dimension must be 1..4");
    if (N < 2 || (N & (N - 1)) != 0) throw GridMismatchError("N must be a power of two");
    if (!(L > 0.0)) throw GridMismatchError("L must be positive");
    Grid g;
    g.n = n;
    for (int a = 0; a < n; ++a) {
        g.N[a] = N;
        g.L[a] = L;
    }
    return g;
}

Grid Grid::default_for(int n) {
    if (n == 1) return cube(1, 256, 8.0);
    if (n == 2) return cube(2, 64, 6.0);
    throw GridMismatchError("defaults exist for n = 1, 2 only");
}

long Grid::size() const {
    long s = 1;
    for (int a = 0; a < n; ++a) s *= N[a];
    return s;
}

double Grid::cell() const {
    double c = 1.0;
    for (int a = 0; a < n; ++a) c *= spacing(a);
    return c;
}

Grid Grid::dual() const {
    Grid g = *this;
    for (int a = 0; a < n; ++a) g.L[a] = std::numbers::pi * N[a] / (2.0 * L[a]);
    return g;
}

Grid Grid::product(const Grid& o) const {
    if (n + o.n > 4) throw GridMismatchError("product grid has more than 4 axes");
    Grid g = *this;
    for (int a = 0; a < o.n; ++a) {
        g.N[n + a] = o.N[a];
        g.L[n + a] = o.L[a];
    }
    g.n = n + o.n;
    return g;
}

bool Grid::same_as(const Grid& o, double tol) const {
    if (n != o.n) return false;
    for (int a = 0; a < n; ++a)
        if (N[a] != o.N[a] || std::abs(L[a] - o.L[a]) > tol * std::max(1.0, std::abs(L[a]))) return false;
    return true;
}

bool Grid::is_cube() const {
    for (int a = 1; a < n; ++a)
        if (N[a] != N[0] || L[a] != L[0]) return false;
    return true;
}

std::array<int, 4> Grid::index(long pt) const {
    std::array<int, 4> idx{};
    for (int a = n - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(pt % N[a]);
        pt /= N[a];
    }
    return idx;
}

long Grid::flat(const std::array<int, 4>& idx) const {
    long p = 0;
    for (int a = 0; a < n; ++a) p = p * N[a] + idx[a];
    return p;
}

std::vector<double> Grid::point(long pt) const {
    auto idx = index(pt);
    std::vector<double> x(n);
    for (int a = 0; a < n; ++a) x[a] = coord(a, idx[a]);
    return x;
}

void require_same(const Grid& a, const Grid& b, const char* where) {
    if (!a.same_as(b)) throw GridMismatchError(std::string(where) + ": grids differ");
}

Field::Field(const Grid& g, int rows, int cols)
    : grid_(g), rows_(rows), cols_(cols), npts_(g.size()),
      data_(static_cast<size_t>(npts_) * rows * cols, cplx(0.0, 0.0)) {}

MatrixElement Field::at(long pt) const {
    MatrixElement m(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c, pt);
    return m;
}

void Field::set(long pt, const MatrixElement& m) {
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) (*this)(r, c, pt) = m(r, c);
}

static void check_shape(const Field& a, const Field& b) {
    require_same(a.grid(), b.grid(), "field arithmetic");
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw GridMismatchError("field arithmetic: entry shapes differ");
}

Field& Field::operator+=(const Field& o) {
    check_shape(*this, o);
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    check_shape(*this, o);
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Field& Field::operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
}

Field Field::operator+(const Field& o) const { Field r = *this; r += o; return r; }
Field Field::operator-(const Field& o) const { Field r = *this; r -= o; return r; }
Field Field::operator*(cplx s) const { Field r = *this; r *= s; return r; }

Field Field::left_mul(const MatrixElement& c) const {
    if (c.cols() != rows_) throw GridMismatchError("left_mul: shape mismatch");
    Field r(grid_, static_cast<int>(c.rows()), cols_);
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < rows_; ++j) {
            cplx cij = c(i, j);
            if (cij == cplx(0.0, 0.0)) continue;
            for (int col = 0; col < cols_; ++col) {
                cplx* dst = r.plane(i, col);
                const cplx* src = plane(j, col);
                for (long p = 0; p < npts_; ++p) dst[p] += cij * src[p];
            }
        }
    return r;
}

Field Field::right_mul(const MatrixElement& c) const {
    if (c.rows() != cols_) throw GridMismatchError("right_mul: shape mismatch");
    Field r(grid_, rows_, static_cast<int>(c.cols()));
    for (int row = 0; row < rows_; ++row)
        for (int j = 0; j < cols_; ++j)
            for (int col = 0; col < c.cols(); ++col) {
                cplx cjk = c(j, col);
                if (cjk == cplx(0.0, 0.0)) continue;
                cplx* dst = r.plane(row, col);
                const cplx* src = plane(row, j);
                for (long p = 0; p < npts_; ++p) dst[p] += src[p] * cjk;
            }
    return r;
}

Field Field::adjoint_pointwise() const {
    Field r(grid_, cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) {
            const cplx* src = plane(i, j);
            cplx* dst = r.plane(j, i);
            for (long p = 0; p < npts_; ++p) dst[p] = std::conj(src[p]);
        }
    return r;
}

double Field::sup_norm() const {
    double s = 0.0;
    if (rows_ == 1 && cols_ == 1) {
        for (long p = 0; p < npts_; ++p) s = std::max(s, std::abs(data_[p]));
        return s;
    }
    for (long p = 0; p < npts_; ++p) s = std::max(s, cstar_norm(at(p)));
    return s;
}

double Field::max_abs() const {
    double s = 0.0;
    for (auto v : data_) s = std::max(s, std::abs(v));
    return s;
}

double Field::l2_norm() const {
    double s = 0.0;
    for (auto v : data_) s += std::norm(v);
    return std::sqrt(s * grid_.cell());
}

Field Field::with_grid(const Grid& g) const {
    if (g.size() != npts_) throw GridMismatchError("with_grid: point count differs");
    Field r = *this;
    r.grid_ = g;
    return r;
}

Field sample(const Grid& g, int rows, int cols,
             const std::function<MatrixElement(const std::vector<double>&)>& f) {
    Field out(g, rows, cols);
    for (long p = 0; p < g.size(); ++p) out.set(p, f(g.point(p)));
    return out;
}

namespace {

std::mutex plan_mutex;

fftw_plan get_plan(const Grid& g, int sign) {
    using Key = std::tuple<int, std::array<int, 4>, int>;
    static std::map<Key, fftw_plan> cache;
    std::array<int, 4> dims{};
    for (int a = 0; a < g.n; ++a) dims[a] = g.N[a];
    Key key{g.n, dims, sign};
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    long total = g.size();
    fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(total));
    fftw_plan p = fftw_plan_dft(g.n, dims.data(), buf, buf, sign > 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    cache.emplace(key, p);
    return p;
}

fftw_plan get_partial_plan(const Grid& g, int count, int sign) {
    using Key = std::tuple<int, std::array<int, 4>, int, int>;
    static std::map<Key, fftw_plan> cache;
    std::array<int, 4> dims{};
    for (int a = 0; a < g.n; ++a) dims[a] = g.N[a];
    Key key{g.n, dims, count, sign};
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    int howmany = 1;
    for (int a = count; a < g.n; ++a) howmany *= g.N[a];
    long total = g.size();
    fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(total));
    fftw_plan p = fftw_plan_many_dft(count, dims.data(), howmany, buf, nullptr, howmany, 1, buf, nullptr,
                                     howmany, 1, sign > 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    cache.emplace(key, p);
    return p;
}

}  // namespace

void fft_leading_axes(Field& f, int count, int sign) {
    if (count < 1 || count > f.grid().n) throw GridMismatchError("bad axis count for partial FFT");
    if (count == f.grid().n) {
        fft_planes(f, sign);
        return;
    }
    fftw_plan p = get_partial_plan(f.grid(), count, sign);
    for (long k = 0; k < f.planes(); ++k) {
        auto* ptr = reinterpret_cast<fftw_complex*>(f.plane(k));
        fftw_execute_dft(p, ptr, ptr);
    }
}

void fft_planes(Field& f, int sign) {
    fftw_plan p = get_plan(f.grid(), sign);
    for (long k = 0; k < f.planes(); ++k) {
        auto* ptr = reinterpret_cast<fftw_complex*>(f.plane(k));
        fftw_execute_dft(p, ptr, ptr);
    }
}

Field fourier_transform(const Field& f, int sign) {
    const Grid& g = f.grid();
    Grid out_grid = g.dual();
    Field r = f.with_grid(out_grid);
    const long npts = g.size();
    // (-1)^{sum of indices} and the constant e^{-+ i pi N/2} per axis.
    std::vector<double> parity(npts);
    for (long p = 0; p < npts; ++p) {
        auto idx = g.index(p);
        int s = 0;
        for (int a = 0; a < g.n; ++a) s += idx[a];
        parity[p] = (s % 2 == 0) ? 1.0 : -1.0;
    }
    double scale = 1.0;
    double phase = 0.0;
    for (int a = 0; a < g.n; ++a) {
        scale *= g.spacing(a) / std::sqrt(2.0 * std::numbers::pi);
        phase += -sign * std::numbers::pi * g.N[a] / 2.0;
    }
    cplx c = scale * std::polar(1.0, phase);
    for (long k = 0; k < r.planes(); ++k) {
        cplx* d = r.plane(k);
        for (long p = 0; p < npts; ++p) d[p] *= parity[p];
    }
    fft_planes(r, sign);
    for (long k = 0; k < r.planes(); ++k) {
        cplx* d = r.plane(k);
        for (long p = 0; p < npts; ++p) d[p] *= c * parity[p];
    }
    return r;
}

namespace {
std::vector<double> mode_parity(const Grid& g) {
    std::vector<double> par(g.size());
    for (long p = 0; p < g.size(); ++p) {
        auto idx = g.index(p);
        int s = 0;
        for (int a = 0; a < g.n; ++a) s += std::abs(fft_freq(idx[a], g.N[a]));
        par[p] = (s % 2 == 0) ? 1.0 : -1.0;
    }
    return par;
}
}  // namespace

Field mode_coefficients(const Field& f) {
    Field c = f;
    fft_planes(c, +1);
    auto par = mode_parity(f.grid());
    const double inv = 1.0 / f.npts();
    for (long k = 0; k < c.planes(); ++k) {
        cplx* d = c.plane(k);
        for (long p = 0; p < c.npts(); ++p) d[p] *= par[p] * inv;
    }
    return c;
}

Field from_mode_coefficients(const Field& c) {
    Field f = c;
    auto par = mode_parity(c.grid());
    for (long k = 0; k < f.planes(); ++k) {
        cplx* d = f.plane(k);
        for (long p = 0; p < f.npts(); ++p) d[p] *= par[p];
    }
    fft_planes(f, -1);
    return f;
}

}  // namespace rieffel
