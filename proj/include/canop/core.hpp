// Basic value types shared by every canop module: plane vectors, complex
// numbers, intervals and the exception hierarchy.
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace canop {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// det(a, b) with a, b as matrix columns.
constexpr double det(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Counter-clockwise rotation by pi/2.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline Vec2 unit_dir(double angle) { return {std::cos(angle), std::sin(angle)}; }
inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Row-major 2x2 matrix.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
};

constexpr Vec2 operator*(const Mat2& m, Vec2 v) { return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y}; }
constexpr Mat2 transpose(const Mat2& m) { return {m.a11, m.a21, m.a12, m.a22}; }
/// Outer product a b^T.
constexpr Mat2 outer(Vec2 a, Vec2 b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr double length() const { return hi - lo; }
    constexpr double mid() const { return 0.5 * (lo + hi); }
    constexpr bool contains(double v, double slack = 0.0) const {
        return v >= lo - slack && v <= hi + slack;
    }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    static Interval unbounded() {
        return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
};

/// Root of all canop errors. Every subclass maps onto a CLI exit class.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: scenario text, flags, inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Argument outside a supported evaluation range (special functions, local expansions).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Iteration failed to converge or an integer-valued result was not integral enough.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Requested accuracy could not be reached within the work budget.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

/// A manifold could not be built from the given data (level set, transversality).
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// Operation used outside its regime (e.g. WKB at a focal branch).
class MethodError : public Error {
public:
    using Error::Error;
};

}  // namespace canop
