#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "octwarp/random.hpp"
#include "octwarp/raster_io.hpp"
#include "octwarp/study.hpp"
#include "octwarp/warpfield.hpp"

namespace fixtures {

/// Temporary directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "octwarp") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Uniform random raster.
inline octwarp::PixelGrid random_image(int width, int height, std::uint64_t seed) {
    octwarp::SplitMix64 rng(seed);
    octwarp::PixelGrid img(width, height);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.next() >> 56);
    return img;
}

/// Layered, B-scan-like synthetic image: bright curved bands on a dark
/// speckled background.
inline octwarp::PixelGrid synthetic_scan(int width, int height, std::uint64_t seed) {
    octwarp::SplitMix64 rng(seed);
    const double phase = rng.uniform() * 2.0 * std::numbers::pi;
    const double dip = 0.05 + 0.1 * rng.uniform();
    octwarp::PixelGrid img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / width;
            const double surface = height * (0.35 + dip * std::exp(-std::pow((u - 0.5) / 0.12, 2.0)) +
                                             0.03 * std::sin(6.0 * u + phase));
            const double depth = y - surface;
            double v = 20.0;
            if (depth > 0 && depth < 0.25 * height) {
                v = 90.0 + 100.0 * std::exp(-std::pow((depth - 8.0) / 5.0, 2.0)) +
                    60.0 * std::sin(depth / 6.0) * std::sin(depth / 6.0);
            }
            v += static_cast<double>(rng.next() >> 59);
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return img;
}

/// 64-bit FNV-1a over a raster, for freezing golden images compactly.
inline std::uint64_t fnv1a(const octwarp::PixelGrid& img) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto p : img.pixels()) {
        h ^= p;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Writes `count` synthetic scans named scan_000.png, ... into `dir`.
inline std::vector<std::filesystem::path> make_pool(const std::filesystem::path& dir, int count, int width = 24,
                                                    int height = 18) {
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scan_%03d.png", i);
        octwarp::save_image(synthetic_scan(width, height, static_cast<std::uint64_t>(i)), dir / name);
    }
    return octwarp::list_images(dir);
}

} // namespace fixtures
