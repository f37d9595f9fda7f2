#include "rieffel/heisenberg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <thread>
#include <tuple>

#include "rieffel/quadrature.hpp"

namespace rieffel {

namespace {
constexpr double kPi = std::numbers::pi;

// e^{i b.x} on the grid.
std::vector<cplx> modulation(const Grid& g, const std::vector<double>& b) {
    std::vector<cplx> e(g.size());
    for (long p = 0; p < g.size(); ++p) {
        auto x = g.point(p);
        double ph = 0.0;
        for (int a = 0; a < g.n; ++a) ph += b[a] * x[a];
        e[p] = std::polar(1.0, ph);
    }
    return e;
}

Field modulate(const Field& f, const std::vector<cplx>& e, cplx scale = 1.0) {
    Field out = f;
    for (long pl = 0; pl < out.planes(); ++pl) {
        cplx* d = out.plane(pl);
        for (long p = 0; p < out.npts(); ++p) d[p] *= scale * e[p];
    }
    return out;
}

std::vector<double> negated(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size(); ++i) r[i] = -v[i];
    return r;
}

void check_dims(const HeisenbergElement& h, int n) {
    if (static_cast<int>(h.a.size()) != n || static_cast<int>(h.b.size()) != n)
        throw InvalidInputError("Heisenberg element has the wrong dimension");
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

void require_n1(int n, const char* what) {
    if (n != 1) throw InvalidInputError(std::string(what) + " is defined for n = 1 only");
}
}  // namespace

// ---------------------------------------------------------------- group

HeisenbergElement HeisenbergElement::identity(int n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0}; }

HeisenbergElement HeisenbergElement::operator*(const HeisenbergElement& o) const {
    if (a.size() != o.a.size()) throw InvalidInputError("Heisenberg elements of different dimension");
    HeisenbergElement r = *this;
    r.c += o.c;
    for (size_t i = 0; i < a.size(); ++i) {
        r.a[i] += o.a[i];
        r.b[i] += o.b[i];
        r.c += a[i] * o.b[i];
    }
    return r;
}

HeisenbergElement HeisenbergElement::inverse() const {
    HeisenbergElement r{negated(a), negated(b), -c};
    for (size_t i = 0; i < a.size(); ++i) r.c += a[i] * b[i];
    return r;
}

Field heisenberg_act(const HeisenbergElement& h, const Field& f) {
    check_dims(h, f.grid().n);
    return modulate(translate(f, negated(h.a)), modulation(f.grid(), h.b), std::polar(1.0, -h.c));
}

PhasePlaneWave adu_symbol(const std::vector<double>& a, const std::vector<double>& b, const PhasePlaneWave& s) {
    PhasePlaneWave r = s;
    for (auto& t : r.terms) {
        double ph = 0.0;
        for (int i = 0; i < s.n; ++i) ph += t.alpha[i] * a[i] + t.beta[i] * b[i];
        t.c *= std::polar(1.0, -ph);
    }
    return r;
}

DiscretizedOperator adu_conjugate(const std::vector<double>& a, const std::vector<double>& b,
                                  const DiscretizedOperator& A) {
    const Grid& g = A.domain();
    if (!A.codomain().same_as(g)) throw GridMismatchError("Ad U needs an operator on one grid");
    if (static_cast<int>(a.size()) != g.n || static_cast<int>(b.size()) != g.n)
        throw InvalidInputError("Ad U parameters have the wrong dimension");
    auto eb = std::make_shared<const std::vector<cplx>>(modulation(g, b));
    auto emb = std::make_shared<const std::vector<cplx>>(modulation(g, negated(b)));
    auto U = [a, eb](const Field& f) { return modulate(translate(f, negated(a)), *eb); };
    auto Uinv = [a, emb](const Field& f) { return translate(modulate(f, *emb), a); };
    std::optional<PhaseSymbol> sym;
    if (A.symbol())
        if (auto* p = std::get_if<PhasePlaneWave>(&*A.symbol())) sym = adu_symbol(a, b, *p);
    return DiscretizedOperator(
        g, g, A.k(), [A, U, Uinv](const Field& f) { return U(A.apply(Uinv(f))); },
        [A, U, Uinv](const Field& f) { return U(A.apply_adjoint(Uinv(f))); }, sym);
}

// ---------------------------------------------------------------- generators

namespace {
DiscretizedOperator fd_generator(const DiscretizedOperator& B, int j, double step) {
    const Grid& g = B.domain();
    const int n = g.n;
    const double h = step > 0.0 ? step : j < n ? g.spacing(j) : g.dual().spacing(j - n);
    auto shifted = [&](double t) {
        std::vector<double> a(n, 0.0), b(n, 0.0);
        (j < n ? a[j] : b[j - n]) = t;
        return adu_conjugate(a, b, B);
    };
    auto central = [&](double s) { return scaled(sum(shifted(s), scaled(shifted(-s), -1.0)), 1.0 / (2.0 * s)); };
    return sum(scaled(central(h), 4.0 / 3.0), scaled(central(2.0 * h), -1.0 / 3.0));
}
}  // namespace

DiscretizedOperator delta(const DiscretizedOperator& A, const MultiIndex& alpha, DeltaRoute route, double fd_step) {
    const int n = A.domain().n;
    if (static_cast<int>(alpha.size()) != 2 * n) throw InvalidInputError("generator multi-index must have length 2n");
    const int k = order(alpha);
    if (k == 0) return A;
    if (route == DeltaRoute::Auto) route = A.symbol() ? DeltaRoute::Symbol : DeltaRoute::FiniteDifference;
    if (route == DeltaRoute::Symbol) {
        if (!A.symbol()) throw UnsupportedOperatorError("operator carries no symbol");
        if (k > kMaxDerivativeOrder) throw OrderTooHighError("generator order " + std::to_string(k) + " exceeds 8");
        MultiIndex ax(alpha.begin(), alpha.begin() + n), axi(alpha.begin() + n, alpha.end());
        PhaseSymbol d = derivative(*A.symbol(), ax, axi);
        if (k % 2) {
            if (auto* p = std::get_if<PhasePlaneWave>(&d))
                d = p->scaled(-1.0);
            else
                std::get<PhaseGrid>(d).f *= -1.0;
        }
        return DiscretizedOperator::from_symbol(d, A.domain());
    }
    if (k > kMaxFiniteDifferenceOrder)
        throw OrderTooHighError("finite-difference generator order " + std::to_string(k) + " exceeds " +
                                std::to_string(kMaxFiniteDifferenceOrder));
    int j = 0;
    while (alpha[j] == 0) ++j;
    MultiIndex rest = alpha;
    --rest[j];
    return fd_generator(delta(A, rest, DeltaRoute::FiniteDifference, fd_step), j, fd_step);
}

namespace {
void all_indices_upto(int dim, int m, std::vector<MultiIndex>& out) {
    for (int k = 0; k <= m; ++k)
        for (auto& a : multi_indices(dim, k)) out.push_back(a);
}
}  // namespace

double rho_m(const DiscretizedOperator& A, int m, DeltaRoute route, const NormOptions& opt) {
    if (m < 0) throw InvalidInputError("rho_m needs m >= 0");
    if (m > kMaxDerivativeOrder) throw OrderTooHighError("rho_m order exceeds 8");
    std::vector<MultiIndex> idx;
    all_indices_upto(2 * A.domain().n, m, idx);
    double best = 0.0;
    for (const auto& a : idx) best = std::max(best, operator_norm(delta(A, a, route), opt));
    return best;
}

DifferentialNormReport differential_norms(const DiscretizedOperator& L, int m, DeltaRoute route,
                                          const NormOptions& opt) {
    if (m < 0) throw InvalidInputError("differential_norms needs m >= 0");
    if (m > kMaxDerivativeOrder) throw OrderTooHighError("differential norm order exceeds 8");
    DifferentialNormReport r;
    r.T.push_back(operator_norm(L, opt));
    for (int k = 1; k <= m; ++k) {
        double t = 0.0;
        for (const auto& a : multi_indices(2 * L.domain().n, k)) t += operator_norm(delta(L, a, route), opt);
        r.T.push_back(t / factorial(k));
    }
    double acc = 0.0;
    for (double t : r.T) r.s.push_back(acc += t);
    return r;
}

// ---------------------------------------------------------------- D and its inverse

double gamma1(double t) { return t >= 0.0 ? std::exp(-t) : 0.0; }
double gamma2(double t) { return t >= 0.0 ? t * std::exp(-t) : 0.0; }

namespace {
// (1 + i w)^2, the per-axis factor of D on e^{iwx}.
cplx d_factor(double w) {
    cplx z(1.0, w);
    return z * z;
}

// int_0^S gamma2(s) e^{-iws} ds with (S + 1) e^{-S} = 1e-10.
cplx gamma2_transform(double w, const QuadRule& q) {
    cplx s(0.0, 0.0);
    for (size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * gamma2(q.x[i]) * std::polar(1.0, -w * q.x[i]);
    return s;
}

constexpr double kGammaTail = 26.2;

cplx gamma2_multiplier(double w) {
    static const QuadRule coarse = composite_gauss(12, 24, 0.0, kGammaTail);
    static const QuadRule fine = composite_gauss(24, 24, 0.0, kGammaTail);
    cplx a = gamma2_transform(w, coarse), b = gamma2_transform(w, fine);
    if (std::abs(a - b) > 1e-11) throw ConvergenceError("gamma2 convolution quadrature did not settle at w = " + std::to_string(w));
    return b;
}

PhaseGrid per_mode(const PhaseGrid& a, const std::function<cplx(double, double)>& mult) {
    require_n1(a.n, "D");
    Field c = mode_coefficients(a.f);
    const Grid& g = c.grid();
    for (long p = 0; p < g.size(); ++p) {
        auto idx = g.index(p);
        double wx = kPi * fft_freq(idx[0], g.N[0]) / g.L[0];
        double wxi = kPi * fft_freq(idx[1], g.N[1]) / g.L[1];
        cplx m = mult(wx, wxi);
        for (long pl = 0; pl < c.planes(); ++pl) c.plane(pl)[p] *= m;
    }
    return PhaseGrid{1, from_mode_coefficients(c)};
}
}  // namespace

PhaseSymbol d_apply(const PhaseSymbol& a) {
    require_n1(phase_dim(a), "D");
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) {
        PhasePlaneWave r = *p;
        for (auto& t : r.terms) t.c *= d_factor(t.alpha[0]) * d_factor(t.beta[0]);
        return r;
    }
    const PhaseGrid& g = std::get<PhaseGrid>(a);
    Field out(g.f.grid(), g.f.rows(), g.f.cols());
    const double binom[3] = {1.0, 2.0, 1.0};
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j) out += derivative(g, {i}, {j}).f * (binom[i] * binom[j]);
    return PhaseGrid{1, out};
}

PhaseSymbol d_inverse(const PhaseSymbol& b) {
    require_n1(phase_dim(b), "D inverse");
    if (auto* p = std::get_if<PhasePlaneWave>(&b)) {
        PhasePlaneWave r = *p;
        for (auto& t : r.terms) t.c *= gamma2_multiplier(t.alpha[0]) * gamma2_multiplier(t.beta[0]);
        return r;
    }
    return per_mode(std::get<PhaseGrid>(b),
                    [](double wx, double wxi) { return gamma2_multiplier(wx) * gamma2_multiplier(wxi); });
}

// ---------------------------------------------------------------- kernels

cplx kernel_u_conj(double s, double eta) {
    if (eta >= 0.0 || s >= 0.0) return 0.0;
    // conj u = gamma2(-s) (1 + d_eta)[(1 + i eta)^2 gamma2(-eta) e^{-is eta}], eta < 0
    cplx z(1.0, eta);
    cplx E = std::exp(cplx(eta, -s * eta));
    cplx h = -z * z * eta * E;
    cplx dh = -(cplx(0.0, 2.0) * z * eta + z * z + z * z * eta * cplx(1.0, -s)) * E;
    return gamma2(-s) * (h + dh);
}

cplx kernel_v(double t, double eta) {
    cplx z(1.0, t);
    return gamma1(t - eta) / (z * z);
}

namespace {
constexpr double kEtaSpan = 40.0;

cplx kernel_integral(double s, double t, int panels, int nodes, double span) {
    double hi = std::min(0.0, t);
    QuadRule q = composite_gauss(panels, nodes, hi - span, hi);
    cplx acc(0.0, 0.0);
    for (size_t i = 0; i < q.x.size(); ++i) acc += q.w[i] * kernel_u_conj(s, q.x[i]) * kernel_v(t, q.x[i]);
    return acc;
}
}  // namespace

double kernel_identity_residual(double s, double t) {
    cplx closed = gamma2(-s) * gamma2(-t) * std::polar(1.0, -s * t);
    return std::abs(kernel_integral(s, t, 10, 48, kEtaSpan) - closed);
}

double kernel_v_norm() { return std::sqrt(kPi) / 2.0; }

double kernel_u_norm() {
    static const double value = [] {
        QuadRule q = composite_gauss(20, 32, -kEtaSpan, 0.0);
        double acc = 0.0;
        for (size_t i = 0; i < q.x.size(); ++i)
            for (size_t j = 0; j < q.x.size(); ++j) acc += q.w[i] * q.w[j] * std::norm(kernel_u_conj(q.x[i], q.x[j]));
        return std::sqrt(acc);
    }();
    return value;
}

// ---------------------------------------------------------------- symbol map S

Grid SymbolMapSpec::grid() const {
    double l = L > 0.0 ? L : std::sqrt(kPi * N / 2.0);
    return Grid::cube(1, N, l);
}

namespace {
using CMat = Eigen::MatrixXcd;

// K_ij = int conj u(s_i, eta) v(t_j, eta) d eta on the (x-grid, dual grid) lattice.
const CMat& kernel_matrix(const SymbolMapSpec& spec) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, int, int, double>, std::unique_ptr<CMat>> cache;
    Grid g = spec.grid();
    auto key = std::make_tuple(spec.N, g.L[0], spec.panels, spec.nodes, spec.eta_span);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    Grid d = g.dual();
    auto K = std::make_unique<CMat>(spec.N, spec.N);
    for (int j = 0; j < spec.N; ++j)
        for (int i = 0; i < spec.N; ++i)
            (*K)(i, j) = kernel_integral(g.coord(0, i), d.coord(0, j), spec.panels, spec.nodes, spec.eta_span);
    return *cache.emplace(key, std::move(K)).first->second;
}

// Phi(x, xi) = (2 pi)^{1/2} ds sum_ij K_ij [U A U^{-1} F^{-1}]_ij with U = U(-x, -xi),
// on every lattice point; entry (r', r) of the k x k result.
Field phi_lattice(const DiscretizedOperator& A, const SymbolMapSpec& spec) {
    const Grid g = spec.grid(), d = g.dual();
    const int N = spec.N, k = A.k();
    const CMat& K = kernel_matrix(spec);
    const double dx = g.spacing(0), dt = d.spacing(0);

    // Columns of A F^{-1}: input column j*k + r carries F^{-1} e_j in row r.
    Field X(g, k, k * N);
    for (int j = 0; j < N; ++j)
        for (int r = 0; r < k; ++r)
            for (int i = 0; i < N; ++i)
                X(r, j * k + r, i) = dt / std::sqrt(2.0 * kPi) * std::polar(1.0, g.coord(0, i) * d.coord(0, j));
    Field Y = A.apply(X);

    // Row FFTs of G^{(r', r)}: Ghat[(r'*k + r)] row i' = FFT_j G_{i', j}.
    Grid line = Grid::cube(1, N, 1.0);
    std::vector<Field> Ghat;
    for (int rp = 0; rp < k; ++rp)
        for (int r = 0; r < k; ++r) {
            Field G(line, N, 1);
            for (int ip = 0; ip < N; ++ip)
                for (int j = 0; j < N; ++j) G(ip, 0, j) = Y(rp, j * k + r, ip);
            fft_planes(G, +1);
            Ghat.push_back(std::move(G));
        }

    Grid out_grid = g.product(d);
    Field Phi(out_grid, k, k);
    const double pref = std::sqrt(2.0 * kPi) * dx;

    auto work = [&](int l0, int l1) {
        for (int l = l0; l < l1; ++l) {
            const double x = g.coord(0, l);
            const int sx = l - N / 2;
            // conj(FFT(conj a_i)), a_ij = K_ij e^{-i x t_j}
            Field Ah(line, N, 1);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) Ah(i, 0, j) = std::conj(K(i, j)) * std::polar(1.0, x * d.coord(0, j));
            fft_planes(Ah, +1);
            for (auto& z : Ah.raw()) z = std::conj(z);
            for (int pair = 0; pair < k * k; ++pair) {
                Field C(line, N, 1);
                for (int i = 0; i < N; ++i) {
                    int ip = ((i + sx) % N + N) % N;
                    for (int w = 0; w < N; ++w) C(i, 0, w) = Ah(i, 0, w) * Ghat[pair](ip, 0, w);
                }
                fft_planes(C, -1);  // c_i(s) * N
                for (int q = 0; q < N; ++q) {
                    const double xi = d.coord(0, q);
                    const int sk = ((q - N / 2) % N + N) % N;
                    cplx acc(0.0, 0.0);
                    for (int i = 0; i < N; ++i) acc += std::polar(1.0, -xi * g.coord(0, i)) * C(i, 0, sk);
                    Phi(pair / k, pair % k, static_cast<long>(l) * N + q) =
                        pref * std::polar(1.0, -x * xi) * acc / static_cast<double>(N);
                }
            }
        }
    };
    const int workers = std::max(1, std::min(spec.workers, N));
    if (workers == 1) {
        work(0, N);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, N * w / workers, N * (w + 1) / workers);
        for (auto& t : pool) t.join();
    }
    return Phi;
}

// D on a lattice function by central differences with steps (h_x, h_xi) = s lattice steps.
Field lattice_D(const Field& Phi, int s) {
    const Grid& pg = Phi.grid();
    const int N0 = pg.N[0], N1 = pg.N[1];
    const double hx = s * pg.spacing(0), hk = s * pg.spacing(1);
    auto w = [](double h, int o) { return o == 0 ? 1.0 - 2.0 / (h * h) : o / h + 1.0 / (h * h); };
    Field out(pg, Phi.rows(), Phi.cols());
    for (long pl = 0; pl < Phi.planes(); ++pl) {
        const cplx* src = Phi.plane(pl);
        cplx* dst = out.plane(pl);
        for (int l = 0; l < N0; ++l)
            for (int q = 0; q < N1; ++q) {
                cplx acc(0.0, 0.0);
                for (int a = -1; a <= 1; ++a)
                    for (int b = -1; b <= 1; ++b) {
                        int ll = ((l + a * s) % N0 + N0) % N0, qq = ((q + b * s) % N1 + N1) % N1;
                        acc += w(hx, a) * w(hk, b) * src[static_cast<long>(ll) * N1 + qq];
                    }
                dst[static_cast<long>(l) * N1 + q] = acc;
            }
    }
    return out;
}

Field richardson(const Field& Phi, int s) { return lattice_D(Phi, s) * (4.0 / 3.0) - lattice_D(Phi, 2 * s) * (1.0 / 3.0); }
}  // namespace

PhaseGrid symbol_map_S(const DiscretizedOperator& A, const SymbolMapSpec& spec, SymbolMapReport* report) {
    const Grid g = spec.grid();
    if (A.domain().n != 1) throw InvalidInputError("symbol_map_S is implemented for n = 1");
    if (!A.domain().same_as(g) || !A.codomain().same_as(g))
        throw GridMismatchError("symbol_map_S needs an operator on SymbolMapSpec::grid()");
    Field fd = richardson(phi_lattice(A, spec), 1);
    SymbolMapReport rep;
    Field result = fd;
    if (A.symbol()) {
        DiscretizedOperator DA = DiscretizedOperator::from_symbol(d_apply(*A.symbol()), g);
        Field sym = phi_lattice(DA, spec);
        double scale = sym.sup_norm();
        rep.route_disagreement = scale > 0.0 ? (fd - sym).sup_norm() / scale : (fd - sym).sup_norm();
        rep.symbol_route = true;
        if (rep.route_disagreement > spec.route_tol)
            throw ConvergenceError("S: finite-difference and symbol routes differ by " +
                                   std::to_string(rep.route_disagreement));
        result = sym;
    } else {
        Field coarse = richardson(phi_lattice(A, spec), 2);
        double scale = fd.sup_norm();
        rep.route_disagreement = scale > 0.0 ? (fd - coarse).sup_norm() / scale : (fd - coarse).sup_norm();
        if (rep.route_disagreement > 16.0 * spec.route_tol)
            throw UnsupportedOperatorError("S: no symbol and finite differences do not settle (" +
                                           std::to_string(rep.route_disagreement) + ")");
    }
    if (report) *report = rep;
    return PhaseGrid{1, result};
}

std::pair<double, double> inverse_cv_bound(const PhaseSymbol& a, const SymbolMapSpec& spec, const NormOptions& opt) {
    require_n1(phase_dim(a), "inverse_cv_bound");
    const Grid g = spec.grid();
    double left = phase_sup(a, g);
    DiscretizedOperator DA = DiscretizedOperator::from_symbol(d_apply(a), g);
    double right = std::sqrt(2.0 * kPi) * kernel_u_norm() * kernel_v_norm() * operator_norm(DA, opt);
    return {left, right};
}

}  // namespace rieffel
