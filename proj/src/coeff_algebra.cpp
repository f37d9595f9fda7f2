#include "rieffel/coeff_algebra.hpp"

#include <algorithm>
#include <cmath>

namespace rieffel {

double cstar_norm(const MatrixElement& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<MatrixElement> svd(a);
    return svd.singularValues()(0);
}

double condition_number(const MatrixElement& a) {
    Eigen::JacobiSVD<MatrixElement> svd(a);
    const auto& s = svd.singularValues();
    double smin = s(s.size() - 1);
    if (smin == 0.0) return INFINITY;
    return s(0) / smin;
}

bool is_self_adjoint(const MatrixElement& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    double scale = std::max(cstar_norm(a), 1e-300);
    return cstar_norm(a - a.adjoint()) <= rel_tol * scale;
}

Spectrum spectrum(const MatrixElement& a, double merge_tol) {
    Spectrum out;
    Eigen::ComplexEigenSolver<MatrixElement> es(a, false);
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    double scale = std::max(1.0, cstar_norm(a));
    auto merge = [&](std::vector<cplx>& dst, cplx z) {
        for (const auto& w : dst)
            if (std::abs(w - z) <= merge_tol * scale) return;
        dst.push_back(z);
    };
    for (auto z : ev) merge(out.values, z);
    auto lex = [](cplx x, cplx y) {
        return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
    };
    std::sort(out.values.begin(), out.values.end(), lex);
    out.unitized = out.values;
    merge(out.unitized, cplx(0.0, 0.0));
    std::sort(out.unitized.begin(), out.unitized.end(), lex);
    return out;
}

double spectral_radius(const std::vector<cplx>& sigma) {
    double r = 0.0;
    for (auto z : sigma) r = std::max(r, std::abs(z));
    return r;
}

UnitizedElement UnitizedElement::operator*(const UnitizedElement& o) const {
    UnitizedElement r;
    r.body = body * o.body + scalar * o.body + o.scalar * body;
    r.scalar = scalar * o.scalar;
    return r;
}

UnitizedElement UnitizedElement::unit(int k) {
    return {MatrixElement::Zero(k, k), cplx(1.0, 0.0)};
}

UnitizedElement unitized_inverse(const UnitizedElement& x) {
    const auto k = x.body.rows();
    if (x.scalar == cplx(0.0, 0.0)) throw SingularError("scalar part is zero");
    MatrixElement shifted = x.scalar * MatrixElement::Identity(k, k) + x.body;
    if (condition_number(shifted) > 1e12) throw SingularError("alpha*1 + a is not invertible");
    UnitizedElement r;
    r.scalar = 1.0 / x.scalar;
    r.body = shifted.inverse() - r.scalar * MatrixElement::Identity(k, k);
    return r;
}

MatrixElement smooth_calculus(const std::function<double(double)>& f, const MatrixElement& b) {
    if (!is_self_adjoint(b)) throw NotSelfAdjointError("functional calculus needs b = b*");
    MatrixElement h = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixElement> es(h);
    const auto& lam = es.eigenvalues();
    Eigen::VectorXcd fl(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) fl(i) = f(lam(i));
    const auto& u = es.eigenvectors();
    return u * fl.asDiagonal() * u.adjoint();
}

namespace {
double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}
}  // namespace

double mollifier_cutoff(double t, double eps) {
    double third = eps / 3.0;
    return smooth_step((2.0 * third - std::abs(t)) / third);
}

MatrixElement lemma_uniq_smooth(const MatrixElement& y, double eps) {
    return smooth_calculus([eps](double t) { return t * (1.0 - mollifier_cutoff(t, eps)); }, y);
}

double seminorm_from_rep(const Representation& rho, const MatrixElement& b) {
    const auto k = b.rows();
    std::vector<MatrixElement> units;
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
            MatrixElement e = MatrixElement::Zero(k, k);
            e(i, j) = 1.0;
            units.push_back(e);
        }
    std::vector<MatrixElement> images;
    for (const auto& e : units) images.push_back(rho(e));
    for (size_t p = 0; p < units.size(); ++p) {
        MatrixElement star = rho(units[p].adjoint());
        if (cstar_norm(star - images[p].adjoint()) > 1e-12)
            throw NotHomomorphismError("rho(e*) != rho(e)*");
        for (size_t q = 0; q < units.size(); ++q) {
            MatrixElement lhs = rho(units[p] * units[q]);
            MatrixElement rhs = images[p] * images[q];
            if (cstar_norm(lhs - rhs) > 1e-12) throw NotHomomorphismError("rho(ef) != rho(e)rho(f)");
        }
    }
    return cstar_norm(rho(b));
}

bool spectral_invariance_check(const MatrixElement& b, const std::vector<MatrixElement>& basis) {
    const auto k = b.rows();
    if (condition_number(b) > 1e12) throw SingularError("b is not invertible");
    const Eigen::Index dim = k * k;

    // Orthonormal basis of the generated unital algebra, grown until closed.
    Eigen::MatrixXcd q(dim, 0);
    auto add = [&](const MatrixElement& m) {
        Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(m.data(), dim);
        double n0 = v.norm();
        if (n0 == 0.0) return false;
        for (int pass = 0; pass < 2; ++pass)
            if (q.cols() > 0) v -= q * (q.adjoint() * v);
        if (v.norm() <= 1e-10 * n0) return false;
        q.conservativeResize(dim, q.cols() + 1);
        q.col(q.cols() - 1) = v / v.norm();
        return true;
    };
    std::vector<MatrixElement> elems;
    MatrixElement id = MatrixElement::Identity(k, k);
    if (add(id)) elems.push_back(id);
    for (const auto& m : basis)
        if (add(m)) elems.push_back(m);
    for (size_t i = 0; i < elems.size(); ++i) {
        for (size_t j = 0; j <= i && j < elems.size(); ++j) {
            MatrixElement p1 = elems[i] * elems[j];
            MatrixElement p2 = elems[j] * elems[i];
            if (add(p1)) elems.push_back(p1);
            if (add(p2)) elems.push_back(p2);
        }
    }

    MatrixElement inv = b.inverse();
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(inv.data(), dim);
    Eigen::VectorXcd r = v - q * (q.adjoint() * v);
    return r.norm() <= 1e-10 * v.norm();
}

}  // namespace rieffel
