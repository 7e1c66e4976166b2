#include "octwarp/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace octwarp {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots,
                                       std::span<const double> values)
    : knots_(knots.begin(), knots.end()),
      values_(values.begin(), values.end()),
      m_(knots.size(), 0.0) {
    const std::size_t n = knots_.size();
    if (n < 2) throw std::invalid_argument("natural spline needs at least two knots");
    if (values_.size() != n) throw std::invalid_argument("knot/value count mismatch");
    for (std::size_t k = 1; k < n; ++k) {
        if (!(knots_[k] > knots_[k - 1]))
            throw std::invalid_argument("spline knots must be strictly increasing");
    }
    if (n == 2) return;

    // Tridiagonal system for interior second derivatives M_1..M_{n-2}:
    //   h_{k-1} M_{k-1} + 2(h_{k-1}+h_k) M_k + h_k M_{k+1}
    //     = 6 ((y_{k+1}-y_k)/h_k - (y_k-y_{k-1})/h_{k-1}),  M_0 = M_{n-1} = 0.
    const std::size_t interior = n - 2;
    std::vector<double> diag(interior), upper(interior), rhs(interior);
    for (std::size_t i = 0; i < interior; ++i) {
        const std::size_t k = i + 1;
        const double h0 = knots_[k] - knots_[k - 1];
        const double h1 = knots_[k + 1] - knots_[k];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((values_[k + 1] - values_[k]) / h1 - (values_[k] - values_[k - 1]) / h0);
    }
    // Thomas algorithm; the matrix is symmetric and strictly diagonally dominant.
    for (std::size_t i = 1; i < interior; ++i) {
        const double lower = knots_[i + 1] - knots_[i];
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_[interior] = rhs[interior - 1] / diag[interior - 1];
    for (std::size_t i = interior - 1; i-- > 0;) {
        m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
    }
}

std::size_t NaturalCubicSpline::segment(double x) const {
    const auto it = std::upper_bound(knots_.begin() + 1, knots_.end() - 1, x);
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

double NaturalCubicSpline::operator()(double x) const {
    const std::size_t k = segment(x);
    const double h = knots_[k + 1] - knots_[k];
    const double a = (knots_[k + 1] - x) / h;
    const double b = (x - knots_[k]) / h;
    return a * values_[k] + b * values_[k + 1] +
           ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * (h * h) / 6.0;
}

double NaturalCubicSpline::derivative(double x) const {
    const std::size_t k = segment(x);
    const double h = knots_[k + 1] - knots_[k];
    const double a = (knots_[k + 1] - x) / h;
    const double b = (x - knots_[k]) / h;
    return (values_[k + 1] - values_[k]) / h -
           (3.0 * a * a - 1.0) / 6.0 * h * m_[k] +
           (3.0 * b * b - 1.0) / 6.0 * h * m_[k + 1];
}

std::vector<double> natural_spline_basis(std::span<const double> knots,
                                         std::span<const double> points) {
    const std::size_t n = knots.size();
    std::vector<double> weights(points.size() * n, 0.0);
    std::vector<double> unit(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::fill(unit.begin(), unit.end(), 0.0);
        unit[k] = 1.0;
        const NaturalCubicSpline basis(knots, unit);
        for (std::size_t p = 0; p < points.size(); ++p) {
            weights[p * n + k] = basis(points[p]);
        }
    }
    return weights;
}

std::vector<double> uniform_knots(int count, int extent) {
    if (count < 2) throw std::invalid_argument("need at least two knots");
    std::vector<double> knots(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        knots[static_cast<std::size_t>(i)] =
            static_cast<double>(i) * static_cast<double>(extent - 1) / static_cast<double>(count - 1);
    }
    return knots;
}

} // namespace octwarp
