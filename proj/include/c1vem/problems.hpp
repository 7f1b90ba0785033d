#pragma once

#include "c1vem/expression.hpp"
#include "c1vem/timestepper.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace c1vem {

/// A space-time field with the derivatives needed by the error evaluator.
class ExactSolution {
public:
    virtual ~ExactSolution() = default;
    virtual double value(const Point& x, double t) const = 0;
    virtual Point gradient(const Point& x, double t) const = 0;
    virtual Eigen::Matrix2d hessian(const Point& x, double t) const = 0;
    /// Right-hand side f that makes this field a solution; empty when zero.
    virtual SpaceTimeField forcing() const { return {}; }
    virtual std::string name() const = 0;
};

/// u = t cos(2 pi x) cos(2 pi y) with f = du/dt - Lap(u^3 - u) + gamma^2 Lap^2 u.
class ManufacturedCase final : public ExactSolution {
public:
    explicit ManufacturedCase(double gamma) : gamma_(gamma) {}

    double value(const Point& x, double t) const override;
    Point gradient(const Point& x, double t) const override;
    Eigen::Matrix2d hessian(const Point& x, double t) const override;
    double time_derivative(const Point& x, double t) const;
    double laplacian(const Point& x, double t) const;
    double bilaplacian(const Point& x, double t) const;
    double forcing_at(const Point& x, double t) const;
    SpaceTimeField forcing() const override;
    std::string name() const override { return "manufactured"; }
    double gamma() const { return gamma_; }

private:
    double gamma_;
};

/// u = c: a steady state of the unforced problem.
class ConstantCase final : public ExactSolution {
public:
    explicit ConstantCase(double c) : c_(c) {}
    double value(const Point&, double) const override { return c_; }
    Point gradient(const Point&, double) const override { return Point::Zero(); }
    Eigen::Matrix2d hessian(const Point&, double) const override { return Eigen::Matrix2d::Zero(); }
    std::string name() const override { return "constant"; }

private:
    double c_;
};

/// Quadratic a0 + a1 x + a2 y + a3 x^2 + a4 xy + a5 y^2, stationary.
class QuadraticField final : public ExactSolution {
public:
    explicit QuadraticField(const Vec6& coeffs) : a_(coeffs) {}
    double value(const Point& x, double) const override;
    Point gradient(const Point& x, double) const override;
    Eigen::Matrix2d hessian(const Point&, double) const override;
    std::string name() const override { return "quadratic"; }

private:
    Vec6 a_;
};

enum class DatumKind { Zero, Constant, Ellipse, Cross, Random, Manufactured, Expression };

/// Initial condition choice.
struct InitialDatum {
    DatumKind kind = DatumKind::Zero;
    double constant = 0.0;
    std::uint64_t seed = 42;
    double gamma = 0.1;    ///< manufactured case
    double t0 = 0.0;       ///< manufactured case
    std::string expression;
    /// Width of a box mollifier applied to discontinuous data (0: none).
    double smoothing = 0.0;

    /// "zero", "constant:c", "ellipse", "cross", "random", "manufactured", "expr:<text>".
    static InitialDatum parse(const std::string& spec);
    std::string to_string() const;
};

/// Test 2 jump set: 0.95 inside 9(x-1/2)^2 + (y-1/2)^2 < 1/9, -0.95 outside.
double ellipse_datum(const Point& x);
/// Plus shape, two 0.6 x 0.2 bars centred at (1/2, 1/2): 0.95 inside, -0.95 outside.
double cross_datum(const Point& x);

/// Uniform doubles in [-1, 1) from the top 53 bits of mt19937_64; portable,
/// unlike std::uniform_real_distribution.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
    double next() { return 2.0 * static_cast<double>(engine_() >> 11) * 0x1.0p-53 - 1.0; }

private:
    std::mt19937_64 engine_;
};

/// Cartesian DOF vector: values u0(vertex), gradients h_v grad u0(vertex) where
/// u0 is differentiable (zero otherwise), boundary normal components removed.
Eigen::VectorXd interpolate_initial(const InitialDatum& datum, const Discretization& disc);

/// Cartesian DOF vector of a field with known value and gradient at time t.
Eigen::VectorXd interpolate(const ExactSolution& u, double t, const Discretization& disc);

struct ErrorNorms {
    double h2 = 0.0;  ///< |u - Pi^Delta u_h| in the broken H2 seminorm
    double h1 = 0.0;  ///< |u - Pi^nabla u_h| in the broken H1 seminorm
    double l2 = 0.0;  ///< ||u - Pi^0 u_h||
};

/// Projection-based errors against the exact field at time t (cartesian U).
ErrorNorms compute_errors(const Eigen::VectorXd& u_cartesian, const ExactSolution& exact, double t,
                          const Discretization& disc);

/// Samples Pi^0 u_h on a (res+1)^2 grid over the mesh bounding box. Returns
/// NaN at points outside every cell.
struct SampledField {
    Point lower, upper;
    int resolution = 0;
    std::vector<double> values;  ///< row-major, (res+1)^2
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * (resolution + 1) + i]; }
};

SampledField sample_pi0(const Eigen::VectorXd& u_cartesian, const Discretization& disc, int resolution);
SampledField sample_function(const std::function<double(const Point&)>& f, const Point& lower, const Point& upper,
                             int resolution);

/// 4 pi A / P^2 of the level set {u = level}, A the smaller of the two phase
/// areas, P the interface length. Throws std::domain_error when no sign change.
double level_set_circularity(const SampledField& field, double level = 0.0);
double level_set_circularity(const Eigen::VectorXd& u_cartesian, const Discretization& disc, double level = 0.0,
                             int resolution = 256);

} // namespace c1vem
