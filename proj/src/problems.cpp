#include "c1vem/problems.hpp"

#include "c1vem/errors.hpp"
#include "c1vem/quadrature.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace c1vem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double parse_double(const std::string& s, const std::string& what)
{
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("malformed number for " + what + ": '" + s + "'");
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// manufactured solution

double ManufacturedCase::value(const Point& x, double t) const
{
    return t * std::cos(kTwoPi * x.x()) * std::cos(kTwoPi * x.y());
}

Point ManufacturedCase::gradient(const Point& x, double t) const
{
    const double cx = std::cos(kTwoPi * x.x()), sx = std::sin(kTwoPi * x.x());
    const double cy = std::cos(kTwoPi * x.y()), sy = std::sin(kTwoPi * x.y());
    return -t * kTwoPi * Point(sx * cy, cx * sy);
}

Eigen::Matrix2d ManufacturedCase::hessian(const Point& x, double t) const
{
    const double cx = std::cos(kTwoPi * x.x()), sx = std::sin(kTwoPi * x.x());
    const double cy = std::cos(kTwoPi * x.y()), sy = std::sin(kTwoPi * x.y());
    const double w2 = kTwoPi * kTwoPi;
    Eigen::Matrix2d H;
    H << -w2 * t * cx * cy, w2 * t * sx * sy, w2 * t * sx * sy, -w2 * t * cx * cy;
    return H;
}

double ManufacturedCase::time_derivative(const Point& x, double) const
{
    return std::cos(kTwoPi * x.x()) * std::cos(kTwoPi * x.y());
}

double ManufacturedCase::laplacian(const Point& x, double t) const
{
    return -2.0 * kTwoPi * kTwoPi * value(x, t);
}

double ManufacturedCase::bilaplacian(const Point& x, double t) const
{
    const double w2 = kTwoPi * kTwoPi;
    return 4.0 * w2 * w2 * value(x, t);
}

double ManufacturedCase::forcing_at(const Point& x, double t) const
{
    // Lap phi(u) = phi''(u) |grad u|^2 + phi'(u) Lap u, phi(u) = u^3 - u
    const double u = value(x, t);
    const double lap_phi = 6.0 * u * gradient(x, t).squaredNorm() + (3.0 * u * u - 1.0) * laplacian(x, t);
    return time_derivative(x, t) - lap_phi + gamma_ * gamma_ * bilaplacian(x, t);
}

SpaceTimeField ManufacturedCase::forcing() const
{
    return [self = *this](const Point& x, double t) { return self.forcing_at(x, t); };
}

double QuadraticField::value(const Point& x, double) const
{
    return a_[0] + a_[1] * x.x() + a_[2] * x.y() + a_[3] * x.x() * x.x() + a_[4] * x.x() * x.y() +
           a_[5] * x.y() * x.y();
}

Point QuadraticField::gradient(const Point& x, double) const
{
    return Point(a_[1] + 2 * a_[3] * x.x() + a_[4] * x.y(), a_[2] + a_[4] * x.x() + 2 * a_[5] * x.y());
}

Eigen::Matrix2d QuadraticField::hessian(const Point&, double) const
{
    Eigen::Matrix2d H;
    H << 2 * a_[3], a_[4], a_[4], 2 * a_[5];
    return H;
}

// ---------------------------------------------------------------------------
// initial data

double ellipse_datum(const Point& x)
{
    const double dx = x.x() - 0.5, dy = x.y() - 0.5;
    return 9.0 * dx * dx + dy * dy < 1.0 / 9.0 ? 0.95 : -0.95;
}

double cross_datum(const Point& x)
{
    const double dx = std::abs(x.x() - 0.5), dy = std::abs(x.y() - 0.5);
    const bool horizontal = dx < 0.3 && dy < 0.1;
    const bool vertical = dx < 0.1 && dy < 0.3;
    return horizontal || vertical ? 0.95 : -0.95;
}

InitialDatum InitialDatum::parse(const std::string& spec)
{
    InitialDatum d;
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (head == "zero") d.kind = DatumKind::Zero;
    else if (head == "ellipse") d.kind = DatumKind::Ellipse;
    else if (head == "cross") d.kind = DatumKind::Cross;
    else if (head == "random") d.kind = DatumKind::Random;
    else if (head == "manufactured") d.kind = DatumKind::Manufactured;
    else if (head == "constant") {
        d.kind = DatumKind::Constant;
        d.constant = parse_double(arg, "constant initial datum");
    } else if (head == "expr") {
        d.kind = DatumKind::Expression;
        d.expression = arg;
        try {
            Expression::parse(arg);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    } else
        throw ConfigError("unknown initial datum '" + spec + "'");
    if (colon != std::string::npos && d.kind != DatumKind::Constant && d.kind != DatumKind::Expression)
        throw ConfigError("initial datum '" + head + "' takes no argument");
    return d;
}

std::string InitialDatum::to_string() const
{
    switch (kind) {
    case DatumKind::Zero: return "zero";
    case DatumKind::Ellipse: return "ellipse";
    case DatumKind::Cross: return "cross";
    case DatumKind::Random: return "random";
    case DatumKind::Manufactured: return "manufactured";
    case DatumKind::Constant: {
        std::ostringstream os;
        os.precision(17);
        os << "constant:" << constant;
        return os.str();
    }
    case DatumKind::Expression: return "expr:" + expression;
    }
    return "zero";
}

namespace {

struct PointDatum {
    std::function<double(const Point&)> f;
    bool smooth = false;
    std::function<Point(const Point&)> gradient;  ///< exact gradient when known
};

/// Box mollifier of width `delta`: mean value over the box and its gradient by
/// the divergence theorem on the box boundary.
std::pair<double, Point> mollified(const std::function<double(const Point&)>& f, const Point& x, double delta)
{
    const GaussRule& g = gauss_legendre(16);
    const double half = 0.5 * delta;
    double mean = 0.0, gx = 0.0, gy = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double si = -half + delta * g.nodes[i];
        gx += g.weights[i] * (f(x + Point(half, si)) - f(x + Point(-half, si)));
        gy += g.weights[i] * (f(x + Point(si, half)) - f(x + Point(si, -half)));
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
            const double sj = -half + delta * g.nodes[j];
            mean += g.weights[i] * g.weights[j] * f(x + Point(si, sj));
        }
    }
    return {mean, Point(gx, gy) / delta};
}

} // namespace

Eigen::VectorXd interpolate_initial(const InitialDatum& datum, const Discretization& disc)
{
    const int nv = disc.dofs.num_vertices();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(disc.dofs.size());
    if (datum.kind == DatumKind::Random) {
        UniformStream rng(datum.seed);
        for (int v = 0; v < nv; ++v) u[3 * v] = rng.next();
        return u;
    }
    if (datum.kind == DatumKind::Manufactured) return interpolate(ManufacturedCase(datum.gamma), datum.t0, disc);

    PointDatum pd;
    switch (datum.kind) {
    case DatumKind::Zero:
        return u;
    case DatumKind::Constant:
        for (int v = 0; v < nv; ++v) u[3 * v] = datum.constant;
        return u;
    case DatumKind::Ellipse: pd.f = ellipse_datum; break;
    case DatumKind::Cross: pd.f = cross_datum; break;
    case DatumKind::Expression: {
        const Expression e = Expression::parse(datum.expression);
        pd.f = [e](const Point& x) { return e(x.x(), x.y(), 0.0); };
        pd.smooth = !e.has_comparison();
        break;
    }
    default: break;
    }

    for (int v = 0; v < nv; ++v) {
        const Point& x = disc.mesh.vertex(v);
        const double hv = disc.dofs.vertex_scale(v);
        double value = pd.f(x);
        Point grad = Point::Zero();
        if (pd.smooth) {
            const double eps = 1e-6;
            grad = Point(pd.f(x + Point(eps, 0)) - pd.f(x - Point(eps, 0)),
                         pd.f(x + Point(0, eps)) - pd.f(x - Point(0, eps))) /
                   (2 * eps);
        } else if (datum.smoothing > 0.0) {
            std::tie(value, grad) = mollified(pd.f, x, datum.smoothing);
        }
        u[3 * v] = value;
        u.segment<2>(3 * v + 1) = hv * grad;
    }
    Eigen::VectorXd w = disc.constraints.to_frame(u);
    disc.constraints.zero_fixed(w);
    return disc.constraints.to_cartesian(w);
}

Eigen::VectorXd interpolate(const ExactSolution& f, double t, const Discretization& disc)
{
    Eigen::VectorXd u(disc.dofs.size());
    for (int v = 0; v < disc.dofs.num_vertices(); ++v) {
        const Point& x = disc.mesh.vertex(v);
        u[3 * v] = f.value(x, t);
        u.segment<2>(3 * v + 1) = disc.dofs.vertex_scale(v) * f.gradient(x, t);
    }
    return u;
}

// ---------------------------------------------------------------------------
// errors

ErrorNorms compute_errors(const Eigen::VectorXd& u, const ExactSolution& exact, double t, const Discretization& disc)
{
    double e2 = 0.0, e1 = 0.0, e0 = 0.0;
    VecX z;
    for (std::size_t e = 0; e < disc.ops.size(); ++e) {
        const auto& op = disc.ops[e];
        const auto& g = disc.dofs.element_dofs(e);
        z.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) z[i] = u[g[i]];
        const Vec6 c0 = op.pi0 * z, cg = op.pi_nabla * z, ch = op.pi_delta * z;
        const Eigen::Matrix2d Hh = op.basis.eval_hessian(ch);
        for (const auto& q : polygon_quadrature(disc.mesh.cell_points(e), op.geometry.centroid, 8)) {
            e0 += q.w * std::pow(exact.value(q.x, t) - op.basis.eval(c0, q.x), 2);
            e1 += q.w * (exact.gradient(q.x, t) - op.basis.eval_gradient(cg, q.x)).squaredNorm();
            e2 += q.w * (exact.hessian(q.x, t) - Hh).squaredNorm();
        }
    }
    return {std::sqrt(std::max(e2, 0.0)), std::sqrt(std::max(e1, 0.0)), std::sqrt(std::max(e0, 0.0))};
}

// ---------------------------------------------------------------------------
// level sets

namespace {

bool inside_polygon(const std::vector<Point>& loop, const Point& p)
{
    bool in = false;
    for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
        const Point& a = loop[i];
        const Point& b = loop[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double xs = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() <= xs) in = !in;
        }
    }
    return in;
}

} // namespace

SampledField sample_pi0(const Eigen::VectorXd& u, const Discretization& disc, int resolution)
{
    SampledField s;
    s.resolution = resolution;
    s.lower = s.upper = disc.mesh.vertex(0);
    for (const Point& p : disc.mesh.vertices()) {
        s.lower = s.lower.cwiseMin(p);
        s.upper = s.upper.cwiseMax(p);
    }
    const int np = resolution + 1;
    s.values.assign(static_cast<std::size_t>(np) * np, std::numeric_limits<double>::quiet_NaN());
    const Point step = (s.upper - s.lower) / resolution;
    VecX z;
    for (std::size_t e = 0; e < disc.ops.size(); ++e) {
        const auto& op = disc.ops[e];
        const auto loop = disc.mesh.cell_points(e);
        Point lo = loop[0], hi = loop[0];
        for (const Point& p : loop) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const auto& g = disc.dofs.element_dofs(e);
        z.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) z[i] = u[g[i]];
        const Vec6 c = op.pi0 * z;
        const double tol = 1e-12 * op.geometry.diameter;
        const int i0 = std::max(0, static_cast<int>(std::floor((lo.x() - s.lower.x() - tol) / step.x())));
        const int i1 = std::min(resolution, static_cast<int>(std::ceil((hi.x() - s.lower.x() + tol) / step.x())));
        const int j0 = std::max(0, static_cast<int>(std::floor((lo.y() - s.lower.y() - tol) / step.y())));
        const int j1 = std::min(resolution, static_cast<int>(std::ceil((hi.y() - s.lower.y() + tol) / step.y())));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                double& slot = s.values[static_cast<std::size_t>(j) * np + i];
                if (!std::isnan(slot)) continue;
                // nudge samples on the outer boundary inward so they fall in a cell
                Point p = s.lower + Point(i * step.x(), j * step.y());
                p = p.cwiseMax(s.lower + Point::Constant(1e-12)).cwiseMin(s.upper - Point::Constant(1e-12));
                if (inside_polygon(loop, p)) slot = op.basis.eval(c, p);
            }
    }
    return s;
}

SampledField sample_function(const std::function<double(const Point&)>& f, const Point& lower, const Point& upper,
                             int resolution)
{
    SampledField s;
    s.lower = lower;
    s.upper = upper;
    s.resolution = resolution;
    const int np = resolution + 1;
    s.values.resize(static_cast<std::size_t>(np) * np);
    const Point step = (upper - lower) / resolution;
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i) s.values[static_cast<std::size_t>(j) * np + i] = f(lower + Point(i * step.x(), j * step.y()));
    return s;
}

double level_set_circularity(const SampledField& s, double level)
{
    const int n = s.resolution;
    const Point step = (s.upper - s.lower) / n;
    double positive = 0.0, total = 0.0, perimeter = 0.0;
    bool saw_pos = false, saw_neg = false;
    // corners in counter-clockwise order: (0,0), (1,0), (1,1), (0,1)
    const int di[4] = {0, 1, 1, 0}, dj[4] = {0, 0, 1, 1};
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double v[4];
            bool valid = true;
            for (int k = 0; k < 4; ++k) {
                v[k] = s.at(i + di[k], j + dj[k]) - level;
                valid = valid && !std::isnan(v[k]);
            }
            if (!valid) continue;
            total += 1.0;
            Point corner[4];
            for (int k = 0; k < 4; ++k) corner[k] = Point(di[k] * step.x(), dj[k] * step.y());
            std::vector<Point> poly;
            Point cross[4];
            bool has_cross[4] = {};
            int mask = 0;
            for (int k = 0; k < 4; ++k) {
                const int l = (k + 1) % 4;
                if (v[k] > 0) {
                    poly.push_back(corner[k]);
                    mask |= 1 << k;
                    saw_pos = true;
                } else
                    saw_neg = true;
                if ((v[k] > 0) != (v[l] > 0)) {
                    const double s01 = v[k] / (v[k] - v[l]);
                    cross[k] = corner[k] + s01 * (corner[l] - corner[k]);
                    has_cross[k] = true;
                    poly.push_back(cross[k]);
                }
            }
            double a = 0.0;
            for (std::size_t k = 0; k < poly.size(); ++k) {
                const Point& p = poly[k];
                const Point& q = poly[(k + 1) % poly.size()];
                a += p.x() * q.y() - p.y() * q.x();
            }
            positive += 0.5 * a / (step.x() * step.y());

            auto seg = [&](int a0, int b0) { perimeter += (cross[a0] - cross[b0]).norm(); };
            if (mask == 0b0101 || mask == 0b1010) {
                const bool center_pos = 0.25 * (v[0] + v[1] + v[2] + v[3]) > 0;
                if ((mask == 0b0101) == center_pos) {
                    seg(0, 1);
                    seg(2, 3);
                } else {
                    seg(3, 0);
                    seg(1, 2);
                }
            } else {
                int ends[2], m = 0;
                for (int k = 0; k < 4; ++k)
                    if (has_cross[k] && m < 2) ends[m++] = k;
                if (m == 2) seg(ends[0], ends[1]);
            }
        }
    if (!saw_pos || !saw_neg || perimeter == 0.0) throw std::domain_error("no interface: the field has no sign change");
    const double cell = step.x() * step.y();
    const double area = cell * std::min(positive, total - positive);
    return 4.0 * std::numbers::pi * area / (perimeter * perimeter);
}

double level_set_circularity(const Eigen::VectorXd& u, const Discretization& disc, double level, int resolution)
{
    return level_set_circularity(sample_pi0(u, disc, resolution), level);
}

} // namespace c1vem
