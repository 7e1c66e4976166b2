#pragma once

// Reference implementations used only by tests. They share no code with
// the library: dense Gaussian elimination for splines, exact integer
// enumeration for hypergeometric tails.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Solves A x = b (row-major n x n) by Gaussian elimination with partial pivoting.
inline std::vector<long double> solve_dense(std::vector<long double> a, std::vector<long double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        }
        if (a[pivot * n + col] == 0.0L) throw std::runtime_error("singular system");
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0L) continue;
            for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
            b[r] -= f * b[col];
        }
    }
    std::vector<long double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        long double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    return x;
}

/// Natural cubic spline via the full 4(n-1) coefficient system:
/// S_k(x) = a_k + b_k t + c_k t^2 + d_k t^3 with t = x - x_k.
class DenseSpline {
public:
    DenseSpline(const std::vector<double>& xs, const std::vector<double>& ys) : xs_(xs) {
        const std::size_t segs = xs.size() - 1;
        const std::size_t n = 4 * segs;
        std::vector<long double> a(n * n, 0.0L), b(n, 0.0L);
        std::size_t row = 0;
        const auto at = [&](std::size_t r, std::size_t c) -> long double& { return a[r * n + c]; };
        for (std::size_t k = 0; k < segs; ++k) {
            const long double h = static_cast<long double>(xs[k + 1]) - xs[k];
            at(row, 4 * k) = 1;  // S_k(x_k) = y_k
            b[row++] = ys[k];
            at(row, 4 * k) = 1;  // S_k(x_{k+1}) = y_{k+1}
            at(row, 4 * k + 1) = h;
            at(row, 4 * k + 2) = h * h;
            at(row, 4 * k + 3) = h * h * h;
            b[row++] = ys[k + 1];
        }
        for (std::size_t k = 0; k + 1 < segs; ++k) {
            const long double h = static_cast<long double>(xs[k + 1]) - xs[k];
            at(row, 4 * k + 1) = 1;  // S_k'(x_{k+1}) - S_{k+1}'(x_{k+1}) = 0
            at(row, 4 * k + 2) = 2 * h;
            at(row, 4 * k + 3) = 3 * h * h;
            at(row, 4 * (k + 1) + 1) = -1;
            ++row;
            at(row, 4 * k + 2) = 2;  // second derivatives match
            at(row, 4 * k + 3) = 6 * h;
            at(row, 4 * (k + 1) + 2) = -2;
            ++row;
        }
        at(row, 2) = 2;  // S_0''(x_0) = 0
        ++row;
        const long double hl = static_cast<long double>(xs[segs]) - xs[segs - 1];
        at(row, 4 * (segs - 1) + 2) = 2;  // S''(x_last) = 0
        at(row, 4 * (segs - 1) + 3) = 6 * hl;
        ++row;
        coef_ = solve_dense(std::move(a), std::move(b));
    }

    double operator()(double x) const {
        std::size_t k = 0;
        while (k + 2 < xs_.size() && x >= xs_[k + 1]) ++k;
        const long double t = static_cast<long double>(x) - xs_[k];
        const auto* c = &coef_[4 * k];
        return static_cast<double>(c[0] + t * (c[1] + t * (c[2] + t * c[3])));
    }

private:
    std::vector<double> xs_;
    std::vector<long double> coef_;
};

/// Tensor-product natural spline through values[i][j] at (xs[j], ys[i]).
inline double dense_surface(const std::vector<double>& xs, const std::vector<double>& ys,
                            const std::vector<std::vector<double>>& values, double x, double y) {
    std::vector<double> column;
    for (const auto& row : values) column.push_back(DenseSpline(xs, row)(x));
    return DenseSpline(ys, column)(y);
}

inline unsigned __int128 choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Two-sided Fisher p by enumerating every table with the observed margins
/// and comparing exact integer numerators C(r1, x) C(r2, c1 - x).
inline long double fisher_enumerate(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    const std::uint64_t r1 = a + b, r2 = c + d, c1 = a + c;
    const auto numerator = [&](std::uint64_t x) { return choose(r1, x) * choose(r2, c1 - x); };
    const unsigned __int128 observed = numerator(a);
    unsigned __int128 tail = 0, total = 0;
    const std::uint64_t lo = c1 > r2 ? c1 - r2 : 0;
    const std::uint64_t hi = r1 < c1 ? r1 : c1;
    for (std::uint64_t x = lo; x <= hi; ++x) {
        const auto w = numerator(x);
        total += w;
        if (w <= observed) tail += w;
    }
    return static_cast<long double>(tail) / static_cast<long double>(total);
}

} // namespace oracle
