#include "rieffel/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "rieffel/errors.hpp"

namespace rieffel {

namespace {
QuadRule reference_rule(int n) {
    static std::mutex mu;
    static std::map<int, QuadRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    cache.emplace(n, r);
    return r;
}
}  // namespace

QuadRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw InvalidInputError("quadrature needs at least one node");
    QuadRule ref = reference_rule(n);
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    double h = 0.5 * (b - a), c = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
        r.x[i] = c + h * ref.x[i];
        r.w[i] = h * ref.w[i];
    }
    return r;
}

QuadRule composite_gauss(int panels, int n, double a, double b) {
    QuadRule r;
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        QuadRule q = gauss_legendre(n, a + p * h, a + (p + 1) * h);
        r.x.insert(r.x.end(), q.x.begin(), q.x.end());
        r.w.insert(r.w.end(), q.w.begin(), q.w.end());
    }
    return r;
}

}  // namespace rieffel
