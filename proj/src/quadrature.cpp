#include "c1vem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace c1vem {

namespace {

GaussRule compute_gauss(int n)
{
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n with the Chebyshev-like initial guess
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        rule.nodes[i] = 0.5 * (1.0 - z);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
        rule.weights[i] = rule.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int npts)
{
    if (npts < 1) throw std::invalid_argument("gauss_legendre: npts must be >= 1");
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(npts);
    if (it == cache.end()) it = cache.emplace(npts, compute_gauss(npts)).first;
    return it->second;
}

std::vector<QuadraturePoint> edge_quadrature(const Point& p0, const Point& p1, int npts)
{
    const GaussRule& g = gauss_legendre(npts);
    const double len = (p1 - p0).norm();
    std::vector<QuadraturePoint> out(npts);
    for (int i = 0; i < npts; ++i) {
        out[i].x = p0 + g.nodes[i] * (p1 - p0);
        out[i].w = g.weights[i] * len;
    }
    return out;
}

void append_triangle_quadrature(const Point& a, const Point& b, const Point& c, int degree,
                                std::vector<QuadraturePoint>& out)
{
    // Collapsed (Duffy) product rule: x = a + u (b-a) + v (1-u) (c-a), Jacobian 2|T| (1-u).
    // Degree d in x becomes degree d+1 in u, so n = ceil((d+2)/2) points suffice.
    const int n = (degree + 3) / 2;
    const GaussRule& g = gauss_legendre(n);
    const Point ab = b - a;
    const Point ac = c - a;
    const double jac = ab.x() * ac.y() - ab.y() * ac.x();  // 2 x signed area
    for (int i = 0; i < n; ++i) {
        const double u = g.nodes[i];
        for (int j = 0; j < n; ++j) {
            const double v = g.nodes[j];
            out.push_back({a + u * ab + v * (1.0 - u) * ac, g.weights[i] * g.weights[j] * (1.0 - u) * jac});
        }
    }
}

std::vector<QuadraturePoint> polygon_quadrature(std::span<const Point> loop, const Point& apex,
                                                int degree)
{
    std::vector<QuadraturePoint> out;
    const std::size_t n = loop.size();
    const int per = (degree + 3) / 2;
    out.reserve(n * per * per);
    for (std::size_t i = 0; i < n; ++i)
        append_triangle_quadrature(apex, loop[i], loop[(i + 1) % n], degree, out);
    return out;
}

} // namespace c1vem
