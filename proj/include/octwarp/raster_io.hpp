#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "octwarp/warpfield.hpp"

namespace octwarp {

enum class ImageFormat { png_gray8, pgm_binary };

/// Format implied by a file extension (.png, .pgm), if any.
std::optional<ImageFormat> format_from_extension(const std::filesystem::path& path);

/// Decodes an 8-bit grayscale PNG or binary (P5) PGM, detected by magic
/// bytes. Color, alpha, palette, and 16-bit inputs are rejected.
PixelGrid load_image(const std::filesystem::path& path);
PixelGrid decode_image(const std::vector<unsigned char>& bytes);

/// Writes losslessly; the format follows the extension unless given.
/// Writes go through a temporary sibling file that is renamed into place,
/// so a failed save leaves no partial file behind.
void save_image(const PixelGrid& image, const std::filesystem::path& path,
                std::optional<ImageFormat> format = std::nullopt);

std::vector<unsigned char> encode_png(const PixelGrid& image);
std::vector<unsigned char> encode_pgm(const PixelGrid& image);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);

/// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size);

} // namespace octwarp
