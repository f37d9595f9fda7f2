#include "rieffel/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rieffel {

namespace {
constexpr double kPi = std::numbers::pi;

void enumerate(int dim, int k, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
    if (pos == dim - 1) {
        cur[pos] = k;
        out.push_back(cur);
        return;
    }
    for (int v = k; v >= 0; --v) {
        cur[pos] = v;
        enumerate(dim, k - v, cur, pos + 1, out);
    }
}

void check_order(const MultiIndex& a) {
    if (order(a) > kMaxDerivativeOrder)
        throw OrderTooHighError("derivative order " + std::to_string(order(a)) + " exceeds " +
                                std::to_string(kMaxDerivativeOrder));
    for (int v : a)
        if (v < 0) throw InvalidInputError("negative multi-index entry");
}

cplx ipow(cplx z, int e) {
    cplx r(1.0, 0.0);
    for (int i = 0; i < e; ++i) r *= z;
    return r;
}

int next_pow2(int v) {
    int p = 1;
    while (p < v) p <<= 1;
    return p;
}
}  // namespace

std::vector<MultiIndex> multi_indices(int dim, int k) {
    std::vector<MultiIndex> out;
    if (dim <= 0) {
        if (k == 0) out.push_back({});
        return out;
    }
    MultiIndex cur(dim, 0);
    enumerate(dim, k, cur, 0, out);
    return out;
}

int order(const MultiIndex& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

DeformationMatrix DeformationMatrix::from(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidInputError("J must be square");
    double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-14) throw InvalidInputError("J is not skew-symmetric");
    DeformationMatrix d;
    d.n = static_cast<int>(m.rows());
    d.J = 0.5 * (m - m.transpose());
    return d;
}

DeformationMatrix DeformationMatrix::zero(int n) {
    DeformationMatrix d;
    d.n = n;
    d.J = Eigen::MatrixXd::Zero(n, n);
    return d;
}

DeformationMatrix DeformationMatrix::symplectic(int n, double theta) {
    if (n % 2 != 0) throw InvalidInputError("symplectic J needs even n");
    DeformationMatrix d = zero(n);
    for (int b = 0; b < n; b += 2) {
        d.J(b, b + 1) = theta;
        d.J(b + 1, b) = -theta;
    }
    return d;
}

// ---------------------------------------------------------------- plane waves

PlaneWaveSymbol PlaneWaveSymbol::constant(int n, double L, const MatrixElement& c) {
    PlaneWaveSymbol f(n, L, static_cast<int>(c.rows()));
    f.add(std::vector<int>(n, 0), c);
    return f;
}

PlaneWaveSymbol PlaneWaveSymbol::single(double L, const std::vector<int>& m, const MatrixElement& c) {
    PlaneWaveSymbol f(static_cast<int>(m.size()), L, static_cast<int>(c.rows()));
    f.add(m, c);
    return f;
}

void PlaneWaveSymbol::add(const std::vector<int>& m, const MatrixElement& c) {
    if (static_cast<int>(m.size()) != n) throw BoxMismatchError("frequency has wrong dimension");
    if (c.rows() != k || c.cols() != k) throw BoxMismatchError("coefficient has wrong size");
    auto it = terms.find(m);
    if (it == terms.end())
        it = terms.emplace(m, c).first;
    else
        it->second += c;
    if (it->second.cwiseAbs().maxCoeff() == 0.0) terms.erase(it);
}

void PlaneWaveSymbol::prune(double tol) {
    for (auto it = terms.begin(); it != terms.end();) {
        if (it->second.cwiseAbs().maxCoeff() <= tol)
            it = terms.erase(it);
        else
            ++it;
    }
}

Eigen::VectorXd PlaneWaveSymbol::frequency(const std::vector<int>& m) const {
    Eigen::VectorXd p(n);
    for (int a = 0; a < n; ++a) p(a) = m[a] / (2.0 * L);
    return p;
}

MatrixElement PlaneWaveSymbol::evaluate(const std::vector<double>& x) const {
    MatrixElement r = MatrixElement::Zero(k, k);
    for (const auto& [m, c] : terms) {
        double ph = 0.0;
        for (int a = 0; a < n; ++a) ph += kPi * m[a] * x[a] / L;
        r += std::polar(1.0, ph) * c;
    }
    return r;
}

Field PlaneWaveSymbol::sample(const Grid& g) const {
    if (g.n != n) throw GridMismatchError("plane wave sampled on grid of wrong dimension");
    Field out(g, k, k);
    bool fft_path = g.is_cube() && std::abs(g.L[0] - L) <= 1e-14 * L && terms.size() > 4;
    if (fft_path)
        for (const auto& [m, c] : terms)
            for (int a = 0; a < n; ++a)
                if (m[a] < -g.N[a] / 2 || m[a] >= g.N[a] / 2) fft_path = false;
    if (fft_path) {
        for (const auto& [m, c] : terms) {
            std::array<int, 4> idx{};
            int sgn = 0;
            for (int a = 0; a < n; ++a) {
                idx[a] = m[a] < 0 ? m[a] + g.N[a] : m[a];
                sgn += m[a];
            }
            long p = g.flat(idx);
            double s = (std::abs(sgn) % 2 == 0) ? 1.0 : -1.0;
            for (int r = 0; r < k; ++r)
                for (int cc = 0; cc < k; ++cc) out(r, cc, p) += s * c(r, cc);
        }
        fft_planes(out, -1);
        return out;
    }
    // Direct evaluation with separable phases.
    const long npts = g.size();
    std::vector<cplx> ph(npts);
    for (const auto& [m, c] : terms) {
        std::vector<std::vector<cplx>> axis(n);
        for (int a = 0; a < n; ++a) {
            axis[a].resize(g.N[a]);
            for (int i = 0; i < g.N[a]; ++i) axis[a][i] = std::polar(1.0, kPi * m[a] * g.coord(a, i) / L);
        }
        for (long p = 0; p < npts; ++p) {
            auto idx = g.index(p);
            cplx v(1.0, 0.0);
            for (int a = 0; a < n; ++a) v *= axis[a][idx[a]];
            ph[p] = v;
        }
        for (int r = 0; r < k; ++r)
            for (int cc = 0; cc < k; ++cc) {
                cplx coef = c(r, cc);
                if (coef == cplx(0.0, 0.0)) continue;
                cplx* d = out.plane(r, cc);
                for (long p = 0; p < npts; ++p) d[p] += coef * ph[p];
            }
    }
    return out;
}

PlaneWaveSymbol PlaneWaveSymbol::adjoint() const {
    PlaneWaveSymbol r(n, L, k);
    for (const auto& [m, c] : terms) {
        std::vector<int> neg(m);
        for (auto& v : neg) v = -v;
        r.add(neg, c.adjoint());
    }
    return r;
}

int PlaneWaveSymbol::max_abs_frequency() const {
    int mx = 0;
    for (const auto& [m, c] : terms)
        for (int v : m) mx = std::max(mx, std::abs(v));
    return mx;
}

std::vector<GridMode> grid_modes(const Field& f, double rel_threshold) {
    const Grid& g = f.grid();
    Field c = f;
    fft_planes(c, +1);
    const long npts = g.size();
    double cut = rel_threshold * c.max_abs() / npts;
    std::vector<GridMode> out;
    for (long p = 0; p < npts; ++p) {
        auto idx = g.index(p);
        std::vector<int> m(g.n);
        int sgn = 0;
        for (int a = 0; a < g.n; ++a) {
            m[a] = fft_freq(idx[a], g.N[a]);
            sgn += m[a];
        }
        double s = (std::abs(sgn) % 2 == 0 ? 1.0 : -1.0) / npts;
        MatrixElement coef(f.rows(), f.cols());
        double big = 0.0;
        for (int r = 0; r < f.rows(); ++r)
            for (int cc = 0; cc < f.cols(); ++cc) {
                coef(r, cc) = s * c(r, cc, p);
                big = std::max(big, std::abs(coef(r, cc)));
            }
        if (big > cut && big > 0.0) out.push_back({std::move(m), std::move(coef)});
    }
    return out;
}

PlaneWaveSymbol to_plane_waves(const Field& f, double rel_threshold) {
    const Grid& g = f.grid();
    if (!g.is_cube()) throw GridMismatchError("plane-wave expansion needs a cubic grid");
    if (f.rows() != f.cols()) throw GridMismatchError("plane-wave expansion needs square entries");
    PlaneWaveSymbol out(g.n, g.L[0], f.rows());
    for (auto& md : grid_modes(f, rel_threshold)) out.terms.emplace(std::move(md.m), std::move(md.c));
    return out;
}

// ---------------------------------------------------------------- phase space

PhasePlaneWave PhasePlaneWave::constant(int n, const MatrixElement& c) {
    PhasePlaneWave a(n, static_cast<int>(c.rows()));
    a.add(std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), c);
    return a;
}

PhasePlaneWave PhasePlaneWave::from_plane_wave(const PlaneWaveSymbol& f) {
    if (f.n % 2 != 0) throw InvalidInputError("phase-space plane wave needs an even dimension");
    const int n = f.n / 2;
    PhasePlaneWave a(n, f.k);
    for (const auto& [m, c] : f.terms) {
        std::vector<double> al(n), be(n);
        for (int i = 0; i < n; ++i) {
            al[i] = kPi * m[i] / f.L;
            be[i] = kPi * m[n + i] / f.L;
        }
        a.add(al, be, c);
    }
    return a;
}

PhasePlaneWave PhasePlaneWave::from_x_symbol(const PlaneWaveSymbol& f) {
    PhasePlaneWave a(f.n, f.k);
    for (const auto& [m, c] : f.terms) {
        std::vector<double> al(f.n);
        for (int i = 0; i < f.n; ++i) al[i] = kPi * m[i] / f.L;
        a.add(al, std::vector<double>(f.n, 0.0), c);
    }
    return a;
}

void PhasePlaneWave::add(const std::vector<double>& alpha, const std::vector<double>& beta,
                         const MatrixElement& c) {
    if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
        throw InvalidInputError("phase frequency has wrong dimension");
    if (c.rows() != k || c.cols() != k) throw InvalidInputError("phase coefficient has wrong size");
    terms.push_back({alpha, beta, c});
}

void PhasePlaneWave::compress(double tol) {
    auto key_less = [](const Term& x, const Term& y) {
        if (x.alpha != y.alpha) return x.alpha < y.alpha;
        return x.beta < y.beta;
    };
    std::stable_sort(terms.begin(), terms.end(), key_less);
    std::vector<Term> merged;
    for (const auto& t : terms) {
        if (!merged.empty() && merged.back().alpha == t.alpha && merged.back().beta == t.beta)
            merged.back().c += t.c;
        else
            merged.push_back(t);
    }
    terms.clear();
    for (auto& t : merged)
        if (t.c.cwiseAbs().maxCoeff() > tol) terms.push_back(std::move(t));
}

MatrixElement PhasePlaneWave::evaluate(const std::vector<double>& x, const std::vector<double>& xi) const {
    MatrixElement r = MatrixElement::Zero(k, k);
    for (const auto& t : terms) {
        double ph = 0.0;
        for (int i = 0; i < n; ++i) ph += t.alpha[i] * x[i] + t.beta[i] * xi[i];
        r += std::polar(1.0, ph) * t.c;
    }
    return r;
}

PhasePlaneWave PhasePlaneWave::derivative(const MultiIndex& ax, const MultiIndex& axi) const {
    MultiIndex all(ax);
    all.insert(all.end(), axi.begin(), axi.end());
    check_order(all);
    PhasePlaneWave r(n, k);
    for (const auto& t : terms) {
        cplx f(1.0, 0.0);
        for (int i = 0; i < n; ++i) {
            f *= ipow(cplx(0.0, t.alpha[i]), ax[i]);
            f *= ipow(cplx(0.0, t.beta[i]), axi[i]);
        }
        if (f != cplx(0.0, 0.0)) r.terms.push_back({t.alpha, t.beta, f * t.c});
    }
    return r;
}

PhasePlaneWave PhasePlaneWave::scaled(cplx s) const {
    PhasePlaneWave r = *this;
    for (auto& t : r.terms) t.c *= s;
    return r;
}

PhasePlaneWave PhasePlaneWave::operator+(const PhasePlaneWave& o) const {
    if (o.n != n || o.k != k) throw InvalidInputError("phase symbols of different shape");
    PhasePlaneWave r = *this;
    r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
    r.compress();
    return r;
}

Grid PhaseGrid::x_grid() const {
    Grid g;
    g.n = n;
    for (int a = 0; a < n; ++a) {
        g.N[a] = f.grid().N[a];
        g.L[a] = f.grid().L[a];
    }
    return g;
}

PhaseGrid PhaseGrid::sample(const PhasePlaneWave& a, const Grid& xg) {
    if (xg.n != a.n) throw GridMismatchError("phase symbol and grid dimension differ");
    Grid dg = xg.dual();
    Grid pg = xg.product(dg);
    PhaseGrid out{a.n, Field(pg, a.k, a.k)};
    const long nx = xg.size(), nxi = dg.size();
    std::vector<cplx> ex(nx), exi(nxi);
    for (const auto& t : a.terms) {
        for (long p = 0; p < nx; ++p) {
            auto x = xg.point(p);
            double ph = 0.0;
            for (int i = 0; i < a.n; ++i) ph += t.alpha[i] * x[i];
            ex[p] = std::polar(1.0, ph);
        }
        for (long q = 0; q < nxi; ++q) {
            auto xi = dg.point(q);
            double ph = 0.0;
            for (int i = 0; i < a.n; ++i) ph += t.beta[i] * xi[i];
            exi[q] = std::polar(1.0, ph);
        }
        for (int r = 0; r < a.k; ++r)
            for (int c = 0; c < a.k; ++c) {
                cplx coef = t.c(r, c);
                if (coef == cplx(0.0, 0.0)) continue;
                cplx* d = out.f.plane(r, c);
                for (long p = 0; p < nx; ++p) {
                    cplx cx = coef * ex[p];
                    for (long q = 0; q < nxi; ++q) d[p * nxi + q] += cx * exi[q];
                }
            }
    }
    return out;
}

PhaseGrid PhaseGrid::sample(const Grid& xg, int k,
                            const std::function<MatrixElement(const std::vector<double>&,
                                                              const std::vector<double>&)>& a) {
    Grid dg = xg.dual();
    Grid pg = xg.product(dg);
    PhaseGrid out{xg.n, Field(pg, k, k)};
    const long nxi = dg.size();
    for (long p = 0; p < xg.size(); ++p) {
        auto x = xg.point(p);
        for (long q = 0; q < nxi; ++q) out.f.set(p * nxi + q, a(x, dg.point(q)));
    }
    return out;
}

PhasePlaneWave to_phase_plane_waves(const PhaseGrid& a, double rel_threshold) {
    const Grid& g = a.f.grid();
    PhasePlaneWave out(a.n, a.f.rows());
    for (const auto& md : grid_modes(a.f, rel_threshold)) {
        std::vector<double> al(a.n), be(a.n);
        for (int i = 0; i < a.n; ++i) {
            al[i] = kPi * md.m[i] / g.L[i];
            be[i] = kPi * md.m[a.n + i] / g.L[a.n + i];
        }
        out.terms.push_back({al, be, md.c});
    }
    return out;
}

int phase_dim(const PhaseSymbol& a) {
    return std::visit([](const auto& s) { return s.n; }, a);
}

int phase_k(const PhaseSymbol& a) {
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) return p->k;
    return std::get<PhaseGrid>(a).f.rows();
}

// ---------------------------------------------------------------- derivatives

PlaneWaveSymbol derivative(const PlaneWaveSymbol& f, const MultiIndex& alpha) {
    check_order(alpha);
    if (static_cast<int>(alpha.size()) != f.n) throw InvalidInputError("multi-index has wrong length");
    PlaneWaveSymbol r(f.n, f.L, f.k);
    for (const auto& [m, c] : f.terms) {
        cplx s(1.0, 0.0);
        for (int a = 0; a < f.n; ++a) s *= ipow(cplx(0.0, kPi * m[a] / f.L), alpha[a]);
        if (s != cplx(0.0, 0.0)) r.terms.emplace(m, s * c);
    }
    return r;
}

Field derivative(const Field& f, const MultiIndex& alpha) {
    check_order(alpha);
    const Grid& g = f.grid();
    if (static_cast<int>(alpha.size()) != g.n) throw InvalidInputError("multi-index has wrong length");
    if (order(alpha) == 0) return f;
    Field c = f;
    fft_planes(c, +1);
    const long npts = g.size();
    std::vector<cplx> mult(npts);
    for (long p = 0; p < npts; ++p) {
        auto idx = g.index(p);
        cplx s(1.0 / npts, 0.0);
        for (int a = 0; a < g.n; ++a) {
            if (alpha[a] == 0) continue;
            int m = fft_freq(idx[a], g.N[a]);
            if (2 * m == -g.N[a] && alpha[a] % 2 == 1) {
                s = 0.0;
                break;
            }
            s *= ipow(cplx(0.0, kPi * m / g.L[a]), alpha[a]);
        }
        mult[p] = s;
    }
    for (long k = 0; k < c.planes(); ++k) {
        cplx* d = c.plane(k);
        for (long p = 0; p < npts; ++p) d[p] *= mult[p];
    }
    fft_planes(c, -1);
    return c;
}

PhaseGrid derivative(const PhaseGrid& a, const MultiIndex& ax, const MultiIndex& axi) {
    MultiIndex all(ax);
    all.insert(all.end(), axi.begin(), axi.end());
    return PhaseGrid{a.n, derivative(a.f, all)};
}

PhaseSymbol derivative(const PhaseSymbol& a, const MultiIndex& ax, const MultiIndex& axi) {
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) return p->derivative(ax, axi);
    return derivative(std::get<PhaseGrid>(a), ax, axi);
}

// ---------------------------------------------------------------- admissibility

namespace {
double point_norm(const Field& f, long p) {
    if (f.rows() == 1 && f.cols() == 1) return std::abs(f(0, 0, p));
    return cstar_norm(f.at(p));
}
}  // namespace

double boundary_ratio(const Field& f) {
    const Grid& g = f.grid();
    double edge = 0.0, inner = 0.0;
    for (long p = 0; p < g.size(); ++p) {
        auto idx = g.index(p);
        bool on_edge = false;
        for (int a = 0; a < g.n; ++a)
            if (idx[a] == 0 || idx[a] == g.N[a] - 1) on_edge = true;
        double v = point_norm(f, p);
        if (on_edge)
            edge = std::max(edge, v);
        else
            inner = std::max(inner, v);
    }
    if (inner == 0.0) return edge == 0.0 ? 0.0 : INFINITY;
    return edge / inner;
}

bool is_decaying(const Field& f, double tol) { return boundary_ratio(f) <= tol; }

double spectral_tail(const Field& f) {
    const Grid& g = f.grid();
    Field c = f;
    fft_planes(c, +1);
    double tail = 0.0, all = 0.0;
    for (long p = 0; p < g.size(); ++p) {
        auto idx = g.index(p);
        bool outer = false;
        for (int a = 0; a < g.n; ++a)
            if (std::abs(fft_freq(idx[a], g.N[a])) >= g.N[a] / 4) outer = true;
        for (long k = 0; k < c.planes(); ++k) {
            double v = std::abs(c.plane(k)[p]);
            all = std::max(all, v);
            if (outer) tail = std::max(tail, v);
        }
    }
    if (all == 0.0) return 0.0;
    return tail / all;
}

bool is_band_limited(const Field& f, double tol) { return spectral_tail(f) <= tol; }

bool is_admissible(const Field& f) { return is_decaying(f) || is_band_limited(f); }

// ---------------------------------------------------------------- seminorms

double seminorm_B(const Field& f, int m) {
    double best = 0.0;
    for (int k = 0; k <= m; ++k)
        for (const auto& a : multi_indices(f.grid().n, k)) best = std::max(best, derivative(f, a).sup_norm());
    return best;
}

double plane_wave_sup(const PlaneWaveSymbol& f) {
    if (f.terms.empty()) return 0.0;
    if (f.terms.size() == 1) return cstar_norm(f.terms.begin()->second);
    int cap = f.n == 1 ? 1024 : (f.n == 2 ? 128 : 32);
    int N = std::min(cap, next_pow2(std::max(64, 8 * (f.max_abs_frequency() + 1))));
    return f.sample(Grid::cube(f.n, N, f.L)).sup_norm();
}

double seminorm_B(const PlaneWaveSymbol& f, int m) {
    double best = 0.0;
    for (int k = 0; k <= m; ++k)
        for (const auto& a : multi_indices(f.n, k)) best = std::max(best, plane_wave_sup(derivative(f, a)));
    return best;
}

double seminorm_S(const Field& f, int m) {
    if (!is_decaying(f)) throw DecayViolationError("seminorm_S needs boundary decay");
    const Grid& g = f.grid();
    std::vector<double> pointwise(g.size(), 0.0);
    for (int k = 0; k <= m; ++k)
        for (const auto& a : multi_indices(g.n, k)) {
            Field d = derivative(f, a);
            for (long p = 0; p < g.size(); ++p) pointwise[p] = std::max(pointwise[p], point_norm(d, p));
        }
    double best = 0.0;
    for (long p = 0; p < g.size(); ++p) {
        auto x = g.point(p);
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        best = std::max(best, std::pow(1.0 + r2, 0.5 * m) * pointwise[p]);
    }
    return best;
}

double phase_sup(const PhasePlaneWave& a, const Grid& xg) {
    PhasePlaneWave c = a;
    c.compress();
    if (c.terms.empty()) return 0.0;
    if (c.terms.size() == 1) return cstar_norm(c.terms[0].c);
    return PhaseGrid::sample(c, xg).f.sup_norm();
}

double phase_sup(const PhaseSymbol& a, const Grid& xg) {
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) return phase_sup(*p, xg);
    return std::get<PhaseGrid>(a).f.sup_norm();
}

// ---------------------------------------------------------------- Fourier, module

Field fourier(const Field& f, int sign) {
    if (sign != 1 && sign != -1) throw InvalidInputError("fourier sign must be +1 or -1");
    return fourier_transform(f, sign);
}

MatrixElement inner_product(const Field& f, const Field& g) {
    require_same(f.grid(), g.grid(), "inner_product");
    if (f.rows() != g.rows()) throw GridMismatchError("inner_product: row counts differ");
    MatrixElement r = MatrixElement::Zero(f.cols(), g.cols());
    const long npts = f.npts();
    for (int a = 0; a < f.cols(); ++a)
        for (int b = 0; b < g.cols(); ++b) {
            cplx s(0.0, 0.0);
            for (int row = 0; row < f.rows(); ++row) {
                const cplx* x = f.plane(row, a);
                const cplx* y = g.plane(row, b);
                for (long p = 0; p < npts; ++p) s += std::conj(x[p]) * y[p];
            }
            r(a, b) = s * f.grid().cell();
        }
    return r;
}

double norm_2(const Field& f) { return std::sqrt(cstar_norm(inner_product(f, f))); }

double norm_L2(const Field& f) {
    double s = 0.0;
    for (long p = 0; p < f.npts(); ++p) {
        double v = point_norm(f, p);
        s += v * v;
    }
    return std::sqrt(s * f.grid().cell());
}

}  // namespace rieffel
