#pragma once

#include <span>
#include <vector>

namespace octwarp {

/// Natural cubic spline through (knots[k], values[k]), k = 0..n-1.
///
/// Knots must be strictly increasing and n >= 2. Second derivatives vanish
/// at both end knots. With two knots the spline is the straight line.
/// Outside [knots.front(), knots.back()] the end cubic is extrapolated.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::span<const double> knots, std::span<const double> values);

    double operator()(double x) const;
    double derivative(double x) const;

    std::span<const double> knots() const { return knots_; }
    std::span<const double> second_derivatives() const { return m_; }

private:
    std::size_t segment(double x) const;

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> m_;
};

/// Cardinal basis of the natural spline evaluated at `points`.
///
/// Returns a row-major points.size() x knots.size() matrix W with
/// W[p][k] = spline through the k-th unit vector, evaluated at points[p].
/// The spline is linear in its data, so for any values v the spline value
/// at points[p] is sum_k W[p][k] * v[k].
std::vector<double> natural_spline_basis(std::span<const double> knots,
                                         std::span<const double> points);

/// Node positions i * (extent - 1) / (count - 1), i = 0..count-1.
std::vector<double> uniform_knots(int count, int extent);

} // namespace octwarp
