#include "rieffel/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "rieffel/quadrature.hpp"

namespace rieffel {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kCheckRadius = 3.0;  // quadrature cross-checks only below this frequency
constexpr int kMaxChecks = 8;

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

struct OscRule {
    int N = 0, M = 0;
    std::vector<double> z, w;
    Eigen::MatrixXcd E;                  // e^{-i z_a z_b}
    std::vector<std::vector<double>> wd; // wd[l][b] = d^l (1+eta^2)^{-M} at node b
    Eigen::VectorXcd zpart;              // sum_a w_a (1+z_a^2)^{-N} E_ab
};

const OscRule& osc_rule(const OscIntegralConfig& cfg) {
    using Key = std::tuple<int, int, double, int>;
    static std::mutex mu;
    static std::map<Key, std::unique_ptr<OscRule>> cache;
    Key key{cfg.N_reg, cfg.M_reg, cfg.R, cfg.Q};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    auto r = std::make_unique<OscRule>();
    r->N = cfg.N_reg;
    r->M = cfg.M_reg;
    QuadRule q = gauss_legendre(cfg.Q, -cfg.R, cfg.R);
    r->z = q.x;
    r->w = q.w;
    const int Q = cfg.Q;
    r->E.resize(Q, Q);
    for (int a = 0; a < Q; ++a)
        for (int b = 0; b < Q; ++b) r->E(a, b) = std::polar(1.0, -r->z[a] * r->z[b]);

    // Taylor coefficients of f^s, f = 1 + eta^2, s = -M.
    const int K = 2 * cfg.N_reg;
    r->wd.assign(K + 1, std::vector<double>(Q));
    const double s = -cfg.M_reg;
    for (int b = 0; b < Q; ++b) {
        double e = r->z[b];
        double f[3] = {1.0 + e * e, 2.0 * e, 1.0};
        std::vector<double> g(K + 1);
        g[0] = std::pow(f[0], s);
        for (int k = 1; k <= K; ++k) {
            double acc = 0.0;
            for (int j = 1; j <= std::min(k, 2); ++j) acc += ((s + 1.0) * j - k) * f[j] * g[k - j];
            g[k] = acc / (k * f[0]);
        }
        double fact = 1.0;
        for (int l = 0; l <= K; ++l) {
            if (l > 0) fact *= l;
            r->wd[l][b] = fact * g[l];
        }
    }
    Eigen::VectorXcd zw(Q);
    for (int a = 0; a < Q; ++a) zw(a) = r->w[a] * std::pow(1.0 + r->z[a] * r->z[a], -cfg.N_reg);
    r->zpart = r->E.transpose() * zw;
    auto& ref = *r;
    cache.emplace(key, std::move(r));
    return ref;
}

// One coordinate pair of the regularized integral of e^{i(pz + q eta)}.
cplx osc_pair(const OscRule& r, double p, double q) {
    const int Q = static_cast<int>(r.z.size());
    Eigen::VectorXcd u(Q), v(Q);
    const double zs = std::pow(1.0 + p * p, r.M);
    for (int a = 0; a < Q; ++a)
        u(a) = r.w[a] * zs * std::pow(1.0 + r.z[a] * r.z[a], -r.N) * std::polar(1.0, p * r.z[a]);
    const cplx iq(0.0, q);
    for (int b = 0; b < Q; ++b) {
        cplx P(0.0, 0.0);
        for (int j = 0; j <= r.N; ++j) {
            double cj = binom(r.N, j) * (j % 2 == 0 ? 1.0 : -1.0);
            for (int l = 0; l <= 2 * j; ++l) P += cj * binom(2 * j, l) * r.wd[l][b] * std::pow(iq, 2 * j - l);
        }
        v(b) = r.w[b] * P * std::polar(1.0, q * r.z[b]);
    }
    cplx s = (u.transpose() * r.E * v)(0, 0);
    return s / (2.0 * kPi);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool in_check_range(const std::vector<double>& p, const std::vector<double>& q) {
    for (double v : p)
        if (std::abs(v) > kCheckRadius) return false;
    for (double v : q)
        if (std::abs(v) > kCheckRadius) return false;
    return true;
}

// Compares the regularized integral with e^{i p.q} on each listed pair.
void check_phases(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                  const OscIntegralConfig& cfg, const char* what) {
    for (const auto& [p, q] : pairs) {
        cplx num = oscillatory_phase(p, q, cfg);
        cplx exact = std::polar(1.0, dot(p, q));
        if (std::abs(num - exact) > 10.0 * cfg.tol)
            throw ConvergenceError(std::string(what) + ": regularized quadrature off by " +
                                   std::to_string(std::abs(num - exact)));
    }
}

void require_k(const Field& a, const Field& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw BoxMismatchError("coefficient sizes differ");
}

// out(x) += c e(x) G(x) for a constant matrix c and scalar field e.
void accumulate(Field& out, const MatrixElement& c, const std::vector<cplx>& e, const Field& G) {
    const int k = out.rows();
    const long npts = out.npts();
    for (int r = 0; r < k; ++r)
        for (int t = 0; t < k; ++t) {
            cplx ct = c(r, t);
            if (ct == cplx(0.0, 0.0)) continue;
            for (int col = 0; col < k; ++col) {
                cplx* d = out.plane(r, col);
                const cplx* gp = G.plane(t, col);
                for (long p = 0; p < npts; ++p) d[p] += ct * e[p] * gp[p];
            }
        }
}

std::vector<long> check_points(const Grid& g, int count) {
    std::vector<long> pts;
    for (int j = 0; j < count; ++j) {
        std::array<int, 4> idx{};
        for (int a = 0; a < g.n; ++a) {
            int step = std::max(1, g.N[a] / 32);
            int off = ((j * 7 + 3 * a + 1) % 9) - 4;
            idx[a] = std::clamp(g.N[a] / 2 + off * step, 0, g.N[a] - 1);
        }
        pts.push_back(g.flat(idx));
    }
    return pts;
}

using CMat = Eigen::MatrixXcd;
using RowMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Largest |m| per axis carrying non-negligible mode weight.
std::array<int, 4> mode_extent(const Field& coeffs) {
    const Grid& g = coeffs.grid();
    double big = coeffs.max_abs();
    std::array<int, 4> ext{};
    for (long p = 0; p < g.size(); ++p) {
        double v = 0.0;
        for (long k = 0; k < coeffs.planes(); ++k) v = std::max(v, std::abs(coeffs.plane(k)[p]));
        if (v <= 1e-15 * big) continue;
        auto idx = g.index(p);
        for (int a = 0; a < g.n; ++a) ext[a] = std::max(ext[a], std::abs(fft_freq(idx[a], g.N[a])));
    }
    return ext;
}

// Exponential table: rows = evaluation coordinates y, cols = FFT index m.
CMat mode_table(const std::vector<double>& y, int N, double L, bool mask) {
    CMat A(static_cast<long>(y.size()), N);
    for (size_t j = 0; j < y.size(); ++j) {
        bool out = mask && std::abs(y[j]) >= L;
        for (int i = 0; i < N; ++i)
            A(static_cast<long>(j), i) = out ? cplx(0.0, 0.0) : std::polar(1.0, kPi * fft_freq(i, N) * y[j] / L);
    }
    return A;
}

// Values of the integral  int F(u) e^{-2 pi i u.x} Ghat(u) du,  F(u) = f(x + Ju),
// Ghat(u) = int g(y) e^{2 pi i u.y} dy, at grid points of f.
std::vector<MatrixElement> quadrature_route(const Field& f, const Field& g, const DeformationMatrix& J,
                                            const std::vector<long>& pts) {
    const Grid& gr = g.grid();
    const int n = gr.n, k = f.rows();
    Field cf = mode_coefficients(f);
    Field cg = mode_coefficients(g);
    bool f_decays = is_decaying(f);
    auto ext_g = mode_extent(cg);
    auto ext_f = mode_extent(cf);

    double jmax = J.J.cwiseAbs().maxCoeff();
    std::vector<QuadRule> rules(n);
    for (int a = 0; a < n; ++a) {
        double U = std::min((ext_g[a] + 1.0) / (2.0 * gr.L[a]), gr.N[a] / (4.0 * gr.L[a]));
        double X = 0.0;
        for (long p : pts) X = std::max(X, std::abs(gr.point(p)[a]));
        double fmax = 0.0;
        for (int b = 0; b < n; ++b) fmax = std::max(fmax, kPi * ext_f[b] / gr.L[b]);
        double phase = 2.0 * U * (2.0 * kPi * (X + gr.L[a]) + fmax * jmax);
        int nodes = std::clamp(static_cast<int>(0.75 * phase) + 48, 64, 1024);
        rules[a] = gauss_legendre(nodes, -U, U);
    }

    // Ghat on the node lattice, per plane.
    std::vector<CMat> Ghat(g.planes());
    std::vector<CMat> B(n);
    for (int a = 0; a < n; ++a) {
        B[a].resize(static_cast<long>(rules[a].x.size()), gr.N[a]);
        for (size_t j = 0; j < rules[a].x.size(); ++j)
            for (int i = 0; i < gr.N[a]; ++i)
                B[a](static_cast<long>(j), i) = std::polar(1.0, 2.0 * kPi * rules[a].x[j] * gr.coord(a, i));
    }
    for (long pl = 0; pl < g.planes(); ++pl) {
        if (n == 1) {
            Eigen::Map<const Eigen::VectorXcd> gv(g.plane(pl), gr.N[0]);
            Ghat[pl] = (B[0] * gv) * gr.cell();
        } else {
            RowMap G(g.plane(pl), gr.N[0], gr.N[1]);
            Ghat[pl] = B[0] * G * B[1].transpose() * gr.cell();
        }
    }

    std::vector<MatrixElement> out;
    for (long pt : pts) {
        auto x = gr.point(pt);
        std::vector<CMat> F(f.planes());
        CMat weight;
        if (n == 1) {
            const auto& u = rules[0].x;
            std::vector<double> y(u.size());
            for (size_t j = 0; j < u.size(); ++j) y[j] = x[0] + J.J(0, 0) * u[j];
            CMat A = mode_table(y, gr.N[0], gr.L[0], f_decays);
            for (long pl = 0; pl < f.planes(); ++pl) {
                Eigen::Map<const Eigen::VectorXcd> c(cf.plane(pl), gr.N[0]);
                F[pl] = A * c;
            }
            weight.resize(static_cast<long>(u.size()), 1);
            for (size_t j = 0; j < u.size(); ++j)
                weight(static_cast<long>(j), 0) = rules[0].w[j] * std::polar(1.0, -2.0 * kPi * u[j] * x[0]);
        } else {
            const auto& u0 = rules[0].x;
            const auto& u1 = rules[1].x;
            std::vector<double> y0(u1.size()), y1(u0.size());
            for (size_t j = 0; j < u1.size(); ++j) y0[j] = x[0] + J.J(0, 1) * u1[j];
            for (size_t j = 0; j < u0.size(); ++j) y1[j] = x[1] + J.J(1, 0) * u0[j];
            CMat A0 = mode_table(y0, gr.N[0], gr.L[0], f_decays);
            CMat A1 = mode_table(y1, gr.N[1], gr.L[1], f_decays);
            for (long pl = 0; pl < f.planes(); ++pl) {
                RowMap C(cf.plane(pl), gr.N[0], gr.N[1]);
                F[pl] = A1 * C.transpose() * A0.transpose();
            }
            weight.resize(static_cast<long>(u0.size()), static_cast<long>(u1.size()));
            for (size_t j0 = 0; j0 < u0.size(); ++j0)
                for (size_t j1 = 0; j1 < u1.size(); ++j1)
                    weight(static_cast<long>(j0), static_cast<long>(j1)) =
                        rules[0].w[j0] * rules[1].w[j1] *
                        std::polar(1.0, -2.0 * kPi * (u0[j0] * x[0] + u1[j1] * x[1]));
        }
        MatrixElement v = MatrixElement::Zero(k, k);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c)
                for (int t = 0; t < k; ++t)
                    v(r, c) += (weight.array() * F[r * k + t].array() * Ghat[t * k + c].array()).sum();
        out.push_back(v);
    }
    return out;
}

// f decaying, g band-limited: sum_q g_q e_q(x) f(x - Jq), f off-grid by
// quadrature of its continuous transform.
std::vector<MatrixElement> shifted_route(const Field& f, const Field& g, const DeformationMatrix& J,
                                         const std::vector<long>& pts) {
    const Grid& gr = f.grid();
    const int n = gr.n;
    auto gm = grid_modes(g, 1e-14);
    // f(y) = int fhat(u) e^{-2 pi i u.y} du, fhat(u) = int f e^{2 pi i u.x} dx.
    std::vector<QuadRule> rules(n);
    Field cf = mode_coefficients(f);
    auto ext = mode_extent(cf);
    for (int a = 0; a < n; ++a) {
        double U = std::min((ext[a] + 1.0) / (2.0 * gr.L[a]), gr.N[a] / (4.0 * gr.L[a]));
        int nodes = std::clamp(static_cast<int>(0.75 * 2.0 * U * 4.0 * kPi * gr.L[a]) + 48, 64, 1024);
        rules[a] = gauss_legendre(nodes, -U, U);
    }
    std::vector<CMat> B(n);
    for (int a = 0; a < n; ++a) {
        B[a].resize(static_cast<long>(rules[a].x.size()), gr.N[a]);
        for (size_t j = 0; j < rules[a].x.size(); ++j)
            for (int i = 0; i < gr.N[a]; ++i)
                B[a](static_cast<long>(j), i) = std::polar(1.0, 2.0 * kPi * rules[a].x[j] * gr.coord(a, i));
    }
    std::vector<CMat> fhat(f.planes());
    for (long pl = 0; pl < f.planes(); ++pl) {
        if (n == 1) {
            Eigen::Map<const Eigen::VectorXcd> fv(f.plane(pl), gr.N[0]);
            fhat[pl] = B[0] * fv * gr.cell();
        } else {
            RowMap F(f.plane(pl), gr.N[0], gr.N[1]);
            fhat[pl] = B[0] * F * B[1].transpose() * gr.cell();
        }
    }
    auto eval_f = [&](const std::vector<double>& y) {
        MatrixElement v(f.rows(), f.cols());
        std::vector<Eigen::VectorXcd> e(n);
        for (int a = 0; a < n; ++a) {
            e[a].resize(static_cast<long>(rules[a].x.size()));
            bool outside = std::abs(y[a]) >= gr.L[a];
            for (size_t j = 0; j < rules[a].x.size(); ++j)
                e[a](static_cast<long>(j)) =
                    outside ? cplx(0.0, 0.0) : rules[a].w[j] * std::polar(1.0, -2.0 * kPi * rules[a].x[j] * y[a]);
        }
        for (int r = 0; r < f.rows(); ++r)
            for (int c = 0; c < f.cols(); ++c) {
                const CMat& H = fhat[r * f.cols() + c];
                v(r, c) = n == 1 ? (e[0].transpose() * H)(0, 0) : (e[0].transpose() * H * e[1])(0, 0);
            }
        return v;
    };
    std::vector<MatrixElement> out;
    for (long pt : pts) {
        auto x = gr.point(pt);
        MatrixElement v = MatrixElement::Zero(f.rows(), g.cols());
        for (const auto& md : gm) {
            Eigen::VectorXd q(n);
            double ph = 0.0;
            for (int a = 0; a < n; ++a) {
                q(a) = md.m[a] / (2.0 * gr.L[a]);
                ph += kPi * md.m[a] * x[a] / gr.L[a];
            }
            Eigen::VectorXd s = J.J * q;
            std::vector<double> y(n);
            for (int a = 0; a < n; ++a) y[a] = x[a] - s(a);
            v += std::polar(1.0, ph) * eval_f(y) * md.c;
        }
        out.push_back(v);
    }
    return out;
}
}  // namespace

void OscIntegralConfig::validate(int n) const {
    if (2 * N_reg <= n || 2 * M_reg <= n)
        throw InvalidInputError("regularization orders must exceed n/2");
    if (!(R > 0.0)) throw InvalidInputError("truncation radius must be positive");
    if (Q < 16) throw InvalidInputError("need at least 16 quadrature points");
    if (!(tol > 0.0)) throw InvalidInputError("tolerance must be positive");
    if (verify_points < 0) throw InvalidInputError("verify_points must be nonnegative");
}

PlaneWaveSymbol deformed_product_exact(const PlaneWaveSymbol& f, const PlaneWaveSymbol& g,
                                       const DeformationMatrix& J) {
    if (f.n != g.n || std::abs(f.L - g.L) > 1e-14 * f.L || f.k != g.k)
        throw BoxMismatchError("plane-wave factors live on different boxes");
    if (J.n != f.n) throw BoxMismatchError("J has the wrong dimension");
    PlaneWaveSymbol out(f.n, f.L, f.k);
    for (const auto& [mp, cp] : f.terms) {
        Eigen::VectorXd p = f.frequency(mp);
        Eigen::VectorXd Jp = J.J.transpose() * p;  // p.Jq = (J^T p).q
        for (const auto& [mq, cq] : g.terms) {
            Eigen::VectorXd q = g.frequency(mq);
            double phase = -2.0 * kPi * Jp.dot(q);
            std::vector<int> m(mp);
            for (int a = 0; a < f.n; ++a) m[a] += mq[a];
            out.add(m, std::polar(1.0, phase) * (cp * cq));
        }
    }
    return out;
}

Field twisted_product(const Field& f, const Field& g, const DeformationMatrix& J) {
    require_same(f.grid(), g.grid(), "deformed product");
    require_k(f, g);
    const Grid& gr = f.grid();
    if (J.n != gr.n) throw BoxMismatchError("J has the wrong dimension");
    const int k = f.rows();
    const long npts = gr.size();
    Field out(gr, k, k);

    if (J.J.cwiseAbs().maxCoeff() == 0.0) {
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) {
                cplx* d = out.plane(r, c);
                for (int t = 0; t < k; ++t) {
                    const cplx* a = f.plane(r, t);
                    const cplx* b = g.plane(t, c);
                    for (long p = 0; p < npts; ++p) d[p] += a[p] * b[p];
                }
            }
        return out;
    }

    Field cf = mode_coefficients(f);
    Field cg = mode_coefficients(g);
    const double cut = 1e-14 * cf.max_abs();
    const int n = gr.n;
    std::vector<cplx> e(npts), shift(npts);
    for (long P = 0; P < npts; ++P) {
        MatrixElement c(k, k);
        double big = 0.0;
        for (int r = 0; r < k; ++r)
            for (int t = 0; t < k; ++t) {
                c(r, t) = cf(r, t, P);
                big = std::max(big, std::abs(c(r, t)));
            }
        if (big <= cut || big == 0.0) continue;
        auto idx = gr.index(P);
        Eigen::VectorXd p(n);
        std::vector<int> m(n);
        for (int a = 0; a < n; ++a) {
            m[a] = fft_freq(idx[a], gr.N[a]);
            p(a) = m[a] / (2.0 * gr.L[a]);
        }
        Eigen::VectorXd s = J.J * p;
        // g(x + s) through its coefficients.
        std::vector<std::vector<cplx>> axis_shift(n), axis_e(n);
        for (int a = 0; a < n; ++a) {
            axis_shift[a].resize(gr.N[a]);
            axis_e[a].resize(gr.N[a]);
            for (int i = 0; i < gr.N[a]; ++i) {
                axis_shift[a][i] = std::polar(1.0, kPi * fft_freq(i, gr.N[a]) * s(a) / gr.L[a]);
                axis_e[a][i] = std::polar(1.0, kPi * m[a] * gr.coord(a, i) / gr.L[a]);
            }
        }
        for (long q = 0; q < npts; ++q) {
            auto qi = gr.index(q);
            cplx vs(1.0, 0.0), ve(1.0, 0.0);
            for (int a = 0; a < n; ++a) {
                vs *= axis_shift[a][qi[a]];
                ve *= axis_e[a][qi[a]];
            }
            shift[q] = vs;
            e[q] = ve;
        }
        Field gs = cg;
        for (long pl = 0; pl < gs.planes(); ++pl) {
            cplx* d = gs.plane(pl);
            for (long q = 0; q < npts; ++q) d[q] *= shift[q];
        }
        gs = from_mode_coefficients(gs);
        accumulate(out, c, e, gs);
    }
    return out;
}

Field deformed_product_numeric(const Field& f, const Field& g, const DeformationMatrix& J,
                               const OscIntegralConfig& cfg, ProductReport* report) {
    cfg.validate(f.grid().n);
    require_same(f.grid(), g.grid(), "deformed product");
    require_k(f, g);
    if (!is_admissible(f) || !is_admissible(g))
        throw DecayViolationError("product factors must decay or be band-limited");
    Field out = twisted_product(f, g, J);
    if (cfg.verify_points == 0) {
        if (report) *report = ProductReport{0.0, 0, "none"};
        return out;
    }

    auto pts = check_points(f.grid(), cfg.verify_points);
    std::vector<MatrixElement> ref;
    std::string oracle;
    if (is_decaying(g)) {
        ref = quadrature_route(f, g, J, pts);
        oracle = "quadrature";
    } else if (is_decaying(f)) {
        ref = shifted_route(f, g, J, pts);
        oracle = "quadrature";
    } else {
        if (!f.grid().is_cube()) throw InvalidInputError("plane-wave oracle needs a cubic grid");
        PlaneWaveSymbol pf = to_plane_waves(f, 1e-13), pg = to_plane_waves(g, 1e-13);
        PlaneWaveSymbol pr = deformed_product_exact(pf, pg, J);
        for (long p : pts) ref.push_back(pr.evaluate(f.grid().point(p)));
        oracle = "plane-wave";
    }
    double scale = f.sup_norm() * g.sup_norm();
    double worst = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        double d = cstar_norm(out.at(pts[i]) - ref[i]);
        worst = std::max(worst, scale > 0.0 ? d / scale : d);
    }
    if (report) *report = ProductReport{worst, static_cast<int>(pts.size()), oracle};
    if (worst > 10.0 * cfg.tol)
        throw ConvergenceError("product routes disagree by " + std::to_string(worst));
    return out;
}

PhasePlaneWave tilde_map(const PlaneWaveSymbol& f, const DeformationMatrix& J) {
    if (J.n != f.n) throw BoxMismatchError("J has the wrong dimension");
    PhasePlaneWave a(f.n, f.k);
    for (const auto& [m, c] : f.terms) {
        Eigen::VectorXd p = f.frequency(m);
        Eigen::VectorXd beta = J.J * p;
        std::vector<double> al(f.n), be(f.n);
        for (int i = 0; i < f.n; ++i) {
            al[i] = 2.0 * kPi * p(i);
            be[i] = beta(i);
        }
        a.add(al, be, c);
    }
    return a;
}

PhasePlaneWave tilde_map(const Field& f, const DeformationMatrix& J, double rel_threshold) {
    const Grid& g = f.grid();
    if (J.n != g.n) throw BoxMismatchError("J has the wrong dimension");
    if (f.rows() != f.cols()) throw BoxMismatchError("symbol entries must be square");
    PhasePlaneWave a(g.n, f.rows());
    for (const auto& md : grid_modes(f, rel_threshold)) {
        Eigen::VectorXd p(g.n);
        std::vector<double> al(g.n), be(g.n);
        for (int i = 0; i < g.n; ++i) {
            p(i) = md.m[i] / (2.0 * g.L[i]);
            al[i] = 2.0 * kPi * p(i);
        }
        Eigen::VectorXd beta = J.J * p;
        for (int i = 0; i < g.n; ++i) be[i] = beta(i);
        a.terms.push_back({al, be, md.c});
    }
    return a;
}

cplx oscillatory_phase(const std::vector<double>& p, const std::vector<double>& q, const OscIntegralConfig& cfg) {
    if (p.size() != q.size()) throw InvalidInputError("frequency vectors differ in length");
    cfg.validate(static_cast<int>(p.size()));
    const OscRule& r = osc_rule(cfg);
    cplx v(1.0, 0.0);
    for (size_t i = 0; i < p.size(); ++i) v *= osc_pair(r, p[i], q[i]);
    return v;
}

PhasePlaneWave symbol_dagger(const PhasePlaneWave& a, const OscIntegralConfig& cfg) {
    PhasePlaneWave out(a.n, a.k);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> checks;
    for (const auto& t : a.terms) {
        std::vector<double> al(t.alpha), be(t.beta);
        for (auto& v : al) v = -v;
        for (auto& v : be) v = -v;
        out.terms.push_back({al, be, std::polar(1.0, dot(t.alpha, t.beta)) * t.c.adjoint()});
        if (static_cast<int>(checks.size()) < kMaxChecks && in_check_range(t.alpha, t.beta))
            checks.emplace_back(t.alpha, t.beta);
    }
    check_phases(checks, cfg, "symbol_dagger");
    out.compress();
    return out;
}

PhasePlaneWave symbol_compose(const PhasePlaneWave& a, const PhasePlaneWave& b, const OscIntegralConfig& cfg) {
    if (a.n != b.n || a.k != b.k) throw BoxMismatchError("symbols of different shape");
    PhasePlaneWave out(a.n, a.k);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> checks;
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms) {
            std::vector<double> al(ta.alpha), be(ta.beta);
            for (int i = 0; i < a.n; ++i) {
                al[i] += tb.alpha[i];
                be[i] += tb.beta[i];
            }
            out.terms.push_back({al, be, std::polar(1.0, dot(tb.alpha, ta.beta)) * (ta.c * tb.c)});
            if (static_cast<int>(checks.size()) < kMaxChecks && in_check_range(tb.alpha, ta.beta)) {
                std::vector<double> p(tb.alpha), q(ta.beta);
                for (auto& v : p) v = -v;
                for (auto& v : q) v = -v;
                checks.emplace_back(p, q);
            }
        }
    check_phases(checks, cfg, "symbol_compose");
    out.compress();
    return out;
}

namespace {
void require_phase_grid(const PhaseGrid& a) {
    const Grid& g = a.f.grid();
    if (g.n != 2 * a.n) throw GridMismatchError("phase grid needs 2n axes");
    for (int i = 0; i < a.n; ++i)
        if (g.N[i] != g.N[a.n + i] || std::abs(g.L[i] * g.L[a.n + i] - kPi * g.N[i] / 2.0) > 1e-9 * g.L[i])
            throw GridMismatchError("frequency axes are not dual to the position axes");
}

// Largest-magnitude modes: (alpha, beta) per mode.
std::vector<std::pair<std::vector<double>, std::vector<double>>> top_modes(const PhaseGrid& a, int count) {
    auto modes = grid_modes(a.f, 1e-12);
    std::stable_sort(modes.begin(), modes.end(), [](const GridMode& x, const GridMode& y) {
        return x.c.cwiseAbs().maxCoeff() > y.c.cwiseAbs().maxCoeff();
    });
    const Grid& g = a.f.grid();
    std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
    for (const auto& md : modes) {
        if (static_cast<int>(out.size()) >= count) break;
        std::vector<double> al(a.n), be(a.n);
        for (int i = 0; i < a.n; ++i) {
            al[i] = kPi * md.m[i] / g.L[i];
            be[i] = kPi * md.m[a.n + i] / g.L[a.n + i];
        }
        out.emplace_back(al, be);
    }
    return out;
}
}  // namespace

PhaseGrid symbol_dagger(const PhaseGrid& a, const OscIntegralConfig& cfg) {
    require_phase_grid(a);
    const Grid& g = a.f.grid();
    const int n = a.n, k = a.f.rows();
    Field C = mode_coefficients(a.f);
    Field D(g, k, k);
    for (long P = 0; P < g.size(); ++P) {
        auto idx = g.index(P);
        std::array<int, 4> neg{};
        double ab = 0.0;
        for (int i = 0; i < n; ++i)
            ab += (kPi * fft_freq(idx[i], g.N[i]) / g.L[i]) * (kPi * fft_freq(idx[n + i], g.N[n + i]) / g.L[n + i]);
        for (int ax = 0; ax < g.n; ++ax) neg[ax] = (g.N[ax] - idx[ax]) % g.N[ax];
        long Pn = g.flat(neg);
        cplx ph = std::polar(1.0, ab);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) D(r, c, Pn) = ph * std::conj(C(c, r, P));
    }
    std::vector<std::pair<std::vector<double>, std::vector<double>>> checks;
    for (auto& pq : top_modes(a, kMaxChecks))
        if (in_check_range(pq.first, pq.second)) checks.push_back(pq);
    check_phases(checks, cfg, "symbol_dagger");
    return PhaseGrid{n, from_mode_coefficients(D)};
}

PhaseGrid symbol_compose(const PhaseGrid& a, const PhaseGrid& b, const OscIntegralConfig& cfg) {
    require_phase_grid(a);
    require_same(a.f.grid(), b.f.grid(), "symbol_compose");
    require_k(a.f, b.f);
    const Grid& g = a.f.grid();
    const int n = a.n, k = a.f.rows();
    Grid xg = a.x_grid();
    const long nx = xg.size(), nxi = g.size() / nx;
    Grid xig;
    xig.n = n;
    for (int i = 0; i < n; ++i) {
        xig.N[i] = g.N[n + i];
        xig.L[i] = g.L[n + i];
    }

    // x-coefficients of b: b(x, xi) = sum_m bhat_m(xi) e^{i pi m.x/L}.
    Field bh = b.f;
    fft_leading_axes(bh, n, +1);
    for (long P = 0; P < nx; ++P) {
        auto idx = xg.index(P);
        int s = 0;
        for (int i = 0; i < n; ++i) s += std::abs(fft_freq(idx[i], xg.N[i]));
        double sc = (s % 2 == 0 ? 1.0 : -1.0) / nx;
        for (long pl = 0; pl < bh.planes(); ++pl) {
            cplx* d = bh.plane(pl) + P * nxi;
            for (long j = 0; j < nxi; ++j) d[j] *= sc;
        }
    }

    // (a x b)(x, xi) = sum_m e^{i pi m.x/L} a(x, xi + pi m/L) bhat_m(xi); the
    // xi shift is exactly m lattice steps.
    Field out(g, k, k);
    std::vector<long> sj(nxi);
    std::vector<cplx> ex(nx);
    for (long P = 0; P < nx; ++P) {
        auto idx = xg.index(P);
        std::vector<int> m(n);
        for (int i = 0; i < n; ++i) m[i] = fft_freq(idx[i], xg.N[i]);
        for (long j = 0; j < nxi; ++j) {
            auto jd = xig.index(j);
            for (int i = 0; i < n; ++i) jd[i] = ((jd[i] + m[i]) % xig.N[i] + xig.N[i]) % xig.N[i];
            sj[j] = xig.flat(jd);
        }
        for (long ip = 0; ip < nx; ++ip) {
            auto x = xg.point(ip);
            double ph = 0.0;
            for (int i = 0; i < n; ++i) ph += kPi * m[i] * x[i] / xg.L[i];
            ex[ip] = std::polar(1.0, ph);
        }
        for (int r = 0; r < k; ++r)
            for (int t = 0; t < k; ++t) {
                const cplx* ap = a.f.plane(r, t);
                for (int c = 0; c < k; ++c) {
                    const cplx* bp = bh.plane(t, c) + P * nxi;
                    cplx* op = out.plane(r, c);
                    for (long ip = 0; ip < nx; ++ip) {
                        const cplx* arow = ap + ip * nxi;
                        cplx* orow = op + ip * nxi;
                        const cplx e = ex[ip];
                        for (long j = 0; j < nxi; ++j) orow[j] += e * arow[sj[j]] * bp[j];
                    }
                }
            }
    }

    std::vector<std::pair<std::vector<double>, std::vector<double>>> checks;
    auto ta = top_modes(a, 3), tb = top_modes(b, 3);
    for (const auto& ma : ta)
        for (const auto& mb : tb) {
            std::vector<double> p(mb.first), q(ma.second);
            for (auto& v : p) v = -v;
            for (auto& v : q) v = -v;
            if (in_check_range(p, q)) checks.emplace_back(p, q);
        }
    check_phases(checks, cfg, "symbol_compose");
    return PhaseGrid{n, out};
}

PhaseSymbol symbol_dagger(const PhaseSymbol& a, const OscIntegralConfig& cfg) {
    if (auto* p = std::get_if<PhasePlaneWave>(&a)) return symbol_dagger(*p, cfg);
    return symbol_dagger(std::get<PhaseGrid>(a), cfg);
}

PhaseSymbol symbol_compose(const PhaseSymbol& a, const PhaseSymbol& b, const OscIntegralConfig& cfg) {
    auto* pa = std::get_if<PhasePlaneWave>(&a);
    auto* pb = std::get_if<PhasePlaneWave>(&b);
    if (pa && pb) return symbol_compose(*pa, *pb, cfg);
    if (pa) {
        const auto& gb = std::get<PhaseGrid>(b);
        return symbol_compose(PhaseGrid::sample(*pa, gb.x_grid()), gb, cfg);
    }
    const auto& ga = std::get<PhaseGrid>(a);
    if (pb) return symbol_compose(ga, PhaseGrid::sample(*pb, ga.x_grid()), cfg);
    return symbol_compose(ga, std::get<PhaseGrid>(b), cfg);
}

double fourier_inversion_check(const PlaneWaveSymbol& f, const std::vector<double>& x,
                               const OscIntegralConfig& cfg) {
    if (static_cast<int>(x.size()) != f.n) throw InvalidInputError("point has the wrong dimension");
    // With z = 2 pi u, eta = -v each term e_p(x + v) becomes e_p(x) e^{i q.eta}, q = -2 pi p.
    MatrixElement integral = MatrixElement::Zero(f.k, f.k);
    std::vector<double> zero(f.n, 0.0), q(f.n);
    for (const auto& [m, c] : f.terms) {
        double ph = 0.0;
        for (int a = 0; a < f.n; ++a) {
            q[a] = -kPi * m[a] / f.L;
            ph += kPi * m[a] * x[a] / f.L;
        }
        integral += std::polar(1.0, ph) * oscillatory_phase(zero, q, cfg) * c;
    }
    return cstar_norm(f.evaluate(x) - integral);
}

double fourier_inversion_check(const Field& f, const std::vector<double>& x, const OscIntegralConfig& cfg) {
    const Grid& g = f.grid();
    if (g.n != 1) throw InvalidInputError("grid Fourier inversion is implemented for n = 1");
    if (x.size() != 1) throw InvalidInputError("point has the wrong dimension");
    cfg.validate(1);
    const OscRule& r = osc_rule(cfg);
    const int Q = cfg.Q, N = g.N[0], K = 2 * cfg.N_reg;
    const double L = g.L[0];
    Field cf = mode_coefficients(f);
    bool decays = is_decaying(f);

    // (2 pi)^{-1} int int e^{-iz eta} f(x - eta); the z-integral is r.zpart and
    // the eta-part carries (1 - d_eta^2)^N [(1+eta^2)^{-M} f(x - eta)].
    auto derivs_at = [&](double y, long pl) {
        std::vector<cplx> d(K + 1, cplx(0.0, 0.0));
        if (decays && std::abs(y) >= L) return d;
        const cplx* c = cf.plane(pl);
        for (int i = 0; i < N; ++i) {
            double w = kPi * fft_freq(i, N) / L;
            cplx e = c[i] * std::polar(1.0, w * y);
            cplx iw(0.0, w);
            for (int l = 0; l <= K; ++l) {
                d[l] += e;
                e *= iw;
            }
        }
        return d;
    };
    MatrixElement integral(f.rows(), f.cols()), value(f.rows(), f.cols());
    for (int row = 0; row < f.rows(); ++row)
        for (int col = 0; col < f.cols(); ++col) {
            long pl = static_cast<long>(row) * f.cols() + col;
            cplx acc(0.0, 0.0);
            for (int b = 0; b < Q; ++b) {
                double eta = r.z[b];
                auto fd = derivs_at(x[0] - eta, pl);
                cplx P(0.0, 0.0);
                for (int j = 0; j <= cfg.N_reg; ++j) {
                    double cj = binom(cfg.N_reg, j) * (j % 2 == 0 ? 1.0 : -1.0);
                    for (int l = 0; l <= 2 * j; ++l) {
                        int d = 2 * j - l;  // d_eta^d f(x - eta) = (-1)^d f^{(d)}
                        P += cj * binom(2 * j, l) * r.wd[l][b] * (d % 2 == 0 ? 1.0 : -1.0) * fd[d];
                    }
                }
                acc += r.zpart(b) * r.w[b] * P;
            }
            integral(row, col) = acc / (2.0 * kPi);
            value(row, col) = derivs_at(x[0], pl)[0];
        }
    return cstar_norm(value - integral);
}

}  // namespace rieffel
