#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "octwarp/spline.hpp"

namespace octwarp {

/// Width x height 8-bit grayscale raster, row-major.
class PixelGrid {
public:
    PixelGrid(int width, int height, std::uint8_t fill = 0);
    PixelGrid(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

struct Displacement {
    double dx = 0.0;
    double dy = 0.0;

    friend bool operator==(const Displacement&, const Displacement&) = default;
};

struct GridDims {
    int rows = 3;
    int cols = 3;

    friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// rows x cols control cells of random displacement, in pixels.
class DeformationGrid {
public:
    DeformationGrid(GridDims dims, double sigma, std::uint64_t seed,
                    std::vector<Displacement> cells);

    GridDims dims() const noexcept { return dims_; }
    int rows() const noexcept { return dims_.rows; }
    int cols() const noexcept { return dims_.cols; }
    double sigma() const noexcept { return sigma_; }
    std::uint64_t seed() const noexcept { return seed_; }

    const Displacement& cell(int row, int col) const {
        return cells_[static_cast<std::size_t>(row * dims_.cols + col)];
    }
    std::span<const Displacement> cells() const noexcept { return cells_; }

    friend bool operator==(const DeformationGrid&, const DeformationGrid&) = default;

private:
    GridDims dims_;
    double sigma_;
    std::uint64_t seed_;
    std::vector<Displacement> cells_;
};

/// Dense per-pixel displacement (ux, uy), row-major, in pixels.
class DisplacementField {
public:
    DisplacementField(int width, int height);
    DisplacementField(int width, int height, std::vector<double> ux, std::vector<double> uy);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    Displacement at(int x, int y) const {
        const auto i = index(x, y);
        return {ux_[i], uy_[i]};
    }
    void set(int x, int y, Displacement d) {
        const auto i = index(x, y);
        ux_[i] = d.dx;
        uy_[i] = d.dy;
    }

    std::span<const double> ux() const noexcept { return ux_; }
    std::span<const double> uy() const noexcept { return uy_; }

    friend bool operator==(const DisplacementField&, const DisplacementField&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_;
    int height_;
    std::vector<double> ux_;
    std::vector<double> uy_;
};

enum class BorderPolicy { clamp, zero, reflect };

BorderPolicy parse_border_policy(std::string_view name);
std::string_view to_string(BorderPolicy policy);

/// Draws 2 * rows * cols values sigma * z, z ~ N(0, 1), from
/// SplitMix64(seed) via Box–Muller. Cells are visited row-major and each
/// cell consumes one Box–Muller pair: the cosine branch is dx, the sine
/// branch is dy.
DeformationGrid sample_grid(GridDims dims, double sigma, std::uint64_t seed);

/// Continuous displacement surface: a tensor-product natural cubic spline
/// through the control cells, with node (i, j) at pixel coordinate
/// (j * (width-1)/(cols-1), i * (height-1)/(rows-1)).
class SplineSurface {
public:
    SplineSurface(const DeformationGrid& grid, int width, int height);

    Displacement at(double x, double y) const;

    std::span<const double> x_knots() const noexcept { return x_knots_; }
    std::span<const double> y_knots() const noexcept { return y_knots_; }

private:
    GridDims dims_;
    std::vector<double> x_knots_;
    std::vector<double> y_knots_;
    std::vector<double> dx_;
    std::vector<double> dy_;
};

/// Samples the spline surface of `grid` at every integer pixel.
DisplacementField build_field(const DeformationGrid& grid, int width, int height);

/// Backward bilinear warp: out(x, y) = in(x + ux, y + uy), rounded half-up.
PixelGrid warp(const PixelGrid& image, const DisplacementField& field,
               BorderPolicy border = BorderPolicy::clamp);

struct Deformation {
    PixelGrid image;
    DeformationGrid grid;
    DisplacementField field;
};

/// sample_grid -> build_field -> warp, keeping every intermediate.
Deformation deform(const PixelGrid& image, double sigma, std::uint64_t seed,
                   GridDims dims = {}, BorderPolicy border = BorderPolicy::clamp);

/// Minimum over interior pixels of det(I + grad u), grad u by central
/// differences. A positive value means no fold-over.
double min_jacobian(const DisplacementField& field);

struct OverlayVertex {
    double x;          ///< undeformed position
    double y;
    double shifted_x;  ///< x + ux(x, y)
    double shifted_y;  ///< y + uy(x, y)
};

using OverlayLine = std::vector<OverlayVertex>;

/// Grid lines every `spacing` pixels (both directions), one vertex per
/// pixel along each line, each vertex moved by the field at that pixel.
std::vector<OverlayLine> overlay_lines(const DisplacementField& field, int spacing);

/// Largest |(ux, uy)| over the vertices of `lines`.
double max_vertex_displacement(std::span<const OverlayLine> lines);

/// Copy of `image` with the displaced grid drawn in `intensity`.
PixelGrid render_grid_overlay(const PixelGrid& image, const DisplacementField& field,
                              int spacing, std::uint8_t intensity = 255);

/// Largest |d(ux)/dx|, |d(ux)/dy|, |d(uy)/dx|, |d(uy)/dy| over interior
/// pixels, by central differences.
double max_abs_gradient(const DisplacementField& field);

struct FieldCheckReport {
    int trials = 0;
    int fold_overs = 0;  ///< trials with min_jacobian <= 0
    double fold_over_rate = 0.0;
    double min_jacobian = 0.0;      ///< lowest over all trials
    double min_magnitude = 0.0;     ///< smallest |u| at any pixel of any trial
    double max_magnitude = 0.0;     ///< largest |u| at any pixel of any trial
    double max_abs_gradient = 0.0;  ///< largest over all trials
};

/// Builds `trials` fields with seeds derive_seed(seed, t), t = 0..trials-1,
/// and summarizes their fold-over behavior.
FieldCheckReport field_check(int width, int height, double sigma, GridDims dims, int trials,
                             std::uint64_t seed);

} // namespace octwarp
