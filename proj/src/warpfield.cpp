#include "octwarp/warpfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "octwarp/random.hpp"

namespace octwarp {

PixelGrid::PixelGrid(int width, int height, std::uint8_t fill)
    : PixelGrid(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

PixelGrid::PixelGrid(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 2 || height < 2)
        throw std::invalid_argument("image must be at least 2x2, got " + std::to_string(width) +
                                    "x" + std::to_string(height));
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("pixel buffer size does not match image dimensions");
}

DeformationGrid::DeformationGrid(GridDims dims, double sigma, std::uint64_t seed,
                                 std::vector<Displacement> cells)
    : dims_(dims), sigma_(sigma), seed_(seed), cells_(std::move(cells)) {
    if (dims.rows < 2 || dims.cols < 2)
        throw std::invalid_argument("deformation grid needs at least 2x2 cells");
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw std::invalid_argument("sigma must be finite and non-negative");
    if (cells_.size() != static_cast<std::size_t>(dims.rows) * static_cast<std::size_t>(dims.cols))
        throw std::invalid_argument("cell count does not match grid dimensions");
}

DisplacementField::DisplacementField(int width, int height)
    : DisplacementField(width, height,
                        std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                            static_cast<std::size_t>(std::max(height, 0))),
                        std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                            static_cast<std::size_t>(std::max(height, 0)))) {}

DisplacementField::DisplacementField(int width, int height, std::vector<double> ux,
                                     std::vector<double> uy)
    : width_(width), height_(height), ux_(std::move(ux)), uy_(std::move(uy)) {
    if (width < 2 || height < 2)
        throw std::invalid_argument("displacement field must be at least 2x2");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (ux_.size() != n || uy_.size() != n)
        throw std::invalid_argument("displacement buffer size does not match field dimensions");
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(ux_.begin(), ux_.end(), finite) || !std::all_of(uy_.begin(), uy_.end(), finite))
        throw std::invalid_argument("displacement field contains non-finite values");
}

BorderPolicy parse_border_policy(std::string_view name) {
    if (name == "clamp") return BorderPolicy::clamp;
    if (name == "zero") return BorderPolicy::zero;
    if (name == "reflect") return BorderPolicy::reflect;
    throw std::invalid_argument("unknown border policy '" + std::string(name) + "'");
}

std::string_view to_string(BorderPolicy policy) {
    switch (policy) {
    case BorderPolicy::clamp: return "clamp";
    case BorderPolicy::zero: return "zero";
    case BorderPolicy::reflect: return "reflect";
    }
    return "clamp";
}

DeformationGrid sample_grid(GridDims dims, double sigma, std::uint64_t seed) {
    if (dims.rows < 2 || dims.cols < 2)
        throw std::invalid_argument("deformation grid needs at least 2x2 cells");
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw std::invalid_argument("sigma must be finite and non-negative");

    SplitMix64 rng(seed);
    std::vector<Displacement> cells(static_cast<std::size_t>(dims.rows) *
                                    static_cast<std::size_t>(dims.cols));
    for (auto& cell : cells) {
        const auto [z0, z1] = rng.normal_pair();
        cell = {sigma * z0, sigma * z1};
    }
    return DeformationGrid(dims, sigma, seed, std::move(cells));
}

SplineSurface::SplineSurface(const DeformationGrid& grid, int width, int height)
    : dims_(grid.dims()),
      x_knots_(uniform_knots(grid.cols(), width)),
      y_knots_(uniform_knots(grid.rows(), height)) {
    if (width < 2 || height < 2) throw std::invalid_argument("field dimensions must be at least 2x2");
    dx_.reserve(grid.cells().size());
    dy_.reserve(grid.cells().size());
    for (const auto& c : grid.cells()) {
        dx_.push_back(c.dx);
        dy_.push_back(c.dy);
    }
}

Displacement SplineSurface::at(double x, double y) const {
    const auto rows = static_cast<std::size_t>(dims_.rows);
    const auto cols = static_cast<std::size_t>(dims_.cols);
    std::vector<double> col_dx(rows), col_dy(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::span<const double> row_dx(dx_.data() + i * cols, cols);
        const std::span<const double> row_dy(dy_.data() + i * cols, cols);
        col_dx[i] = NaturalCubicSpline(x_knots_, row_dx)(x);
        col_dy[i] = NaturalCubicSpline(x_knots_, row_dy)(x);
    }
    return {NaturalCubicSpline(y_knots_, col_dx)(y), NaturalCubicSpline(y_knots_, col_dy)(y)};
}

DisplacementField build_field(const DeformationGrid& grid, int width, int height) {
    if (width < 2 || height < 2) throw std::invalid_argument("field dimensions must be at least 2x2");

    const auto rows = static_cast<std::size_t>(grid.rows());
    const auto cols = static_cast<std::size_t>(grid.cols());
    const auto w = static_cast<std::size_t>(width);
    const auto h = static_cast<std::size_t>(height);

    std::vector<double> xs(w), ys(h);
    for (std::size_t x = 0; x < w; ++x) xs[x] = static_cast<double>(x);
    for (std::size_t y = 0; y < h; ++y) ys[y] = static_cast<double>(y);
    const auto wx = natural_spline_basis(uniform_knots(grid.cols(), width), xs);
    const auto wy = natural_spline_basis(uniform_knots(grid.rows(), height), ys);

    // Interpolate every control row along x first: rows x width.
    std::vector<double> row_dx(rows * w, 0.0), row_dy(rows * w, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t x = 0; x < w; ++x) {
            double sx = 0.0, sy = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                const auto& c = grid.cell(static_cast<int>(i), static_cast<int>(j));
                sx += wx[x * cols + j] * c.dx;
                sy += wx[x * cols + j] * c.dy;
            }
            row_dx[i * w + x] = sx;
            row_dy[i * w + x] = sy;
        }
    }

    std::vector<double> ux(w * h, 0.0), uy(w * h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        double* out_x = ux.data() + y * w;
        double* out_y = uy.data() + y * w;
        for (std::size_t i = 0; i < rows; ++i) {
            const double weight = wy[y * rows + i];
            const double* in_x = row_dx.data() + i * w;
            const double* in_y = row_dy.data() + i * w;
            for (std::size_t x = 0; x < w; ++x) {
                out_x[x] += weight * in_x[x];
                out_y[x] += weight * in_y[x];
            }
        }
    }
    return DisplacementField(width, height, std::move(ux), std::move(uy));
}

namespace {

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
    const std::int64_t period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

struct BorderFetch {
    const PixelGrid& image;
    BorderPolicy policy;

    double operator()(std::int64_t x, std::int64_t y) const {
        const std::int64_t w = image.width();
        const std::int64_t h = image.height();
        if (x >= 0 && x < w && y >= 0 && y < h)
            return image.at(static_cast<int>(x), static_cast<int>(y));
        switch (policy) {
        case BorderPolicy::zero:
            return 0.0;
        case BorderPolicy::reflect:
            return image.at(static_cast<int>(reflect_index(x, w)), static_cast<int>(reflect_index(y, h)));
        case BorderPolicy::clamp:
        default:
            return image.at(static_cast<int>(std::clamp<std::int64_t>(x, 0, w - 1)),
                            static_cast<int>(std::clamp<std::int64_t>(y, 0, h - 1)));
        }
    }
};

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

} // namespace

PixelGrid warp(const PixelGrid& image, const DisplacementField& field, BorderPolicy border) {
    if (image.width() != field.width() || image.height() != field.height())
        throw std::invalid_argument("image and displacement field dimensions differ");

    const int w = image.width();
    const int h = image.height();
    const auto src = image.pixels();
    const auto ux = field.ux();
    const auto uy = field.uy();
    const BorderFetch fetch{image, border};
    // Keep sample coordinates well inside int64 range; the border policy
    // decides the value long before this limit matters.
    constexpr double kLimit = 1e9;

    PixelGrid out(w, h);
    auto dst = out.pixels();
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
        for (int x = 0; x < w; ++x) {
            const std::size_t i = row + static_cast<std::size_t>(x);
            const double sx = std::clamp(x + ux[i], -kLimit, kLimit);
            const double sy = std::clamp(y + uy[i], -kLimit, kLimit);
            const double fx0 = std::floor(sx);
            const double fy0 = std::floor(sy);
            const double fx = sx - fx0;
            const double fy = sy - fy0;
            const auto x0 = static_cast<std::int64_t>(fx0);
            const auto y0 = static_cast<std::int64_t>(fy0);

            double p00, p10, p01, p11;
            if (x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h) {
                const std::size_t base = static_cast<std::size_t>(y0) * static_cast<std::size_t>(w) +
                                         static_cast<std::size_t>(x0);
                p00 = src[base];
                p10 = src[base + 1];
                p01 = src[base + static_cast<std::size_t>(w)];
                p11 = src[base + static_cast<std::size_t>(w) + 1];
            } else {
                p00 = fetch(x0, y0);
                p10 = fetch(x0 + 1, y0);
                p01 = fetch(x0, y0 + 1);
                p11 = fetch(x0 + 1, y0 + 1);
            }
            const double top = (1.0 - fx) * p00 + fx * p10;
            const double bottom = (1.0 - fx) * p01 + fx * p11;
            dst[i] = quantize((1.0 - fy) * top + fy * bottom);
        }
    }
    return out;
}

Deformation deform(const PixelGrid& image, double sigma, std::uint64_t seed, GridDims dims,
                   BorderPolicy border) {
    auto grid = sample_grid(dims, sigma, seed);
    auto field = build_field(grid, image.width(), image.height());
    auto warped = warp(image, field, border);
    return {std::move(warped), std::move(grid), std::move(field)};
}

double min_jacobian(const DisplacementField& field) {
    const int w = field.width();
    const int h = field.height();
    if (w < 3 || h < 3) throw std::invalid_argument("field has no interior pixels");

    double lowest = std::numeric_limits<double>::infinity();
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const auto right = field.at(x + 1, y);
            const auto left = field.at(x - 1, y);
            const auto down = field.at(x, y + 1);
            const auto up = field.at(x, y - 1);
            const double dux_dx = 0.5 * (right.dx - left.dx);
            const double dux_dy = 0.5 * (down.dx - up.dx);
            const double duy_dx = 0.5 * (right.dy - left.dy);
            const double duy_dy = 0.5 * (down.dy - up.dy);
            const double det = (1.0 + dux_dx) * (1.0 + duy_dy) - dux_dy * duy_dx;
            lowest = std::min(lowest, det);
        }
    }
    return lowest;
}

std::vector<OverlayLine> overlay_lines(const DisplacementField& field, int spacing) {
    if (spacing < 2) throw std::invalid_argument("grid spacing must be at least 2 pixels");
    const int w = field.width();
    const int h = field.height();

    const auto vertex = [&field](int x, int y) {
        const auto d = field.at(x, y);
        return OverlayVertex{static_cast<double>(x), static_cast<double>(y), x + d.dx, y + d.dy};
    };

    std::vector<OverlayLine> lines;
    for (int x = 0; x < w; x += spacing) {
        OverlayLine line;
        line.reserve(static_cast<std::size_t>(h));
        for (int y = 0; y < h; ++y) line.push_back(vertex(x, y));
        lines.push_back(std::move(line));
    }
    for (int y = 0; y < h; y += spacing) {
        OverlayLine line;
        line.reserve(static_cast<std::size_t>(w));
        for (int x = 0; x < w; ++x) line.push_back(vertex(x, y));
        lines.push_back(std::move(line));
    }
    return lines;
}

double max_vertex_displacement(std::span<const OverlayLine> lines) {
    double largest = 0.0;
    for (const auto& line : lines) {
        for (const auto& v : line) {
            largest = std::max(largest, std::hypot(v.shifted_x - v.x, v.shifted_y - v.y));
        }
    }
    return largest;
}

PixelGrid render_grid_overlay(const PixelGrid& image, const DisplacementField& field, int spacing,
                              std::uint8_t intensity) {
    if (image.width() != field.width() || image.height() != field.height())
        throw std::invalid_argument("image and displacement field dimensions differ");
    const auto lines = overlay_lines(field, spacing);

    PixelGrid out = image;
    const auto plot = [&out](double x, double y, std::uint8_t value) {
        const double rx = std::floor(x + 0.5);
        const double ry = std::floor(y + 0.5);
        if (rx < 0 || ry < 0 || rx >= out.width() || ry >= out.height()) return;
        out.at(static_cast<int>(rx), static_cast<int>(ry)) = value;
    };
    for (const auto& line : lines) {
        for (std::size_t k = 0; k + 1 < line.size(); ++k) {
            const auto& p = line[k];
            const auto& q = line[k + 1];
            const double span = std::max(std::abs(q.shifted_x - p.shifted_x),
                                         std::abs(q.shifted_y - p.shifted_y));
            const int steps = std::max(1, static_cast<int>(std::ceil(std::min(span, 1e6))));
            for (int s = 0; s <= steps; ++s) {
                const double t = static_cast<double>(s) / steps;
                plot(p.shifted_x + t * (q.shifted_x - p.shifted_x),
                     p.shifted_y + t * (q.shifted_y - p.shifted_y), intensity);
            }
        }
    }
    return out;
}

double max_abs_gradient(const DisplacementField& field) {
    const int w = field.width();
    const int h = field.height();
    if (w < 3 || h < 3) throw std::invalid_argument("field has no interior pixels");
    double largest = 0.0;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const auto right = field.at(x + 1, y);
            const auto left = field.at(x - 1, y);
            const auto down = field.at(x, y + 1);
            const auto up = field.at(x, y - 1);
            largest = std::max({largest, 0.5 * std::abs(right.dx - left.dx), 0.5 * std::abs(down.dx - up.dx),
                                0.5 * std::abs(right.dy - left.dy), 0.5 * std::abs(down.dy - up.dy)});
        }
    }
    return largest;
}

FieldCheckReport field_check(int width, int height, double sigma, GridDims dims, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("field check needs at least one trial");
    FieldCheckReport report;
    report.trials = trials;
    report.min_jacobian = std::numeric_limits<double>::infinity();
    report.min_magnitude = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const auto grid = sample_grid(dims, sigma, derive_seed(seed, static_cast<std::uint64_t>(t)));
        const auto field = build_field(grid, width, height);
        const double jac = min_jacobian(field);
        if (jac <= 0.0) ++report.fold_overs;
        report.min_jacobian = std::min(report.min_jacobian, jac);
        report.max_abs_gradient = std::max(report.max_abs_gradient, max_abs_gradient(field));
        const auto ux = field.ux();
        const auto uy = field.uy();
        for (std::size_t i = 0; i < ux.size(); ++i) {
            const double m = std::hypot(ux[i], uy[i]);
            report.min_magnitude = std::min(report.min_magnitude, m);
            report.max_magnitude = std::max(report.max_magnitude, m);
        }
    }
    report.fold_over_rate = static_cast<double>(report.fold_overs) / trials;
    return report;
}

} // namespace octwarp
