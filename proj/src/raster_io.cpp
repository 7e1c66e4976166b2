#include "octwarp/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace octwarp {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// --- PGM -----------------------------------------------------------------

class PgmReader {
public:
    explicit PgmReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    long header_number() {
        skip_whitespace_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw std::runtime_error("malformed PGM header");
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) throw std::runtime_error("PGM header value out of range");
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw std::runtime_error("malformed PGM header");
        return pos_ + 1;
    }

    void skip(std::size_t n) { pos_ += n; }

private:
    void skip_whitespace_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

PixelGrid decode_pgm(const std::vector<unsigned char>& bytes) {
    PgmReader reader(bytes);
    reader.skip(2);
    const long width = reader.header_number();
    const long height = reader.header_number();
    const long maxval = reader.header_number();
    if (maxval <= 0 || maxval > 65535) throw std::runtime_error("invalid PGM maxval");
    if (maxval > 255) throw std::runtime_error("PGM is not 8-bit (maxval " + std::to_string(maxval) + ")");
    const std::size_t offset = reader.raster_offset();
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() < offset + count) throw std::runtime_error("truncated PGM raster");
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
    if (std::any_of(pixels.begin(), pixels.end(), [maxval](std::uint8_t v) { return v > maxval; }))
        throw std::runtime_error("PGM sample exceeds maxval");
    return PixelGrid(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

// --- PNG -----------------------------------------------------------------

struct MemoryReader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
};

void png_error_handler(png_structp png, png_const_charp message) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text) *text = message;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void png_read_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->pos + length > reader->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, reader->bytes.data() + reader->pos, length);
    reader->pos += length;
}

void png_write_memory(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

// libpng reports errors through longjmp; keep everything with a destructor
// outside the setjmp frames below.
struct PngReadState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteState() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

PixelGrid decode_png(const std::vector<unsigned char>& bytes) {
    std::string error;
    PngReadState state;
    state.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler,
                                       png_warning_handler);
    if (!state.png) throw std::runtime_error("cannot allocate PNG decoder");
    state.info = png_create_info_struct(state.png);
    if (!state.info) throw std::runtime_error("cannot allocate PNG decoder");

    MemoryReader reader{bytes};
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    bool wrong_kind = false;

    if (setjmp(png_jmpbuf(state.png))) {
        throw std::runtime_error("malformed PNG: " + error);
    }
    png_set_read_fn(state.png, &reader, png_read_memory);
    png_read_info(state.png, state.info);
    png_get_IHDR(state.png, state.info, &width, &height, &bit_depth, &color_type, &interlace,
                 nullptr, nullptr);
    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 8) {
        wrong_kind = true;
    } else {
        if (interlace != PNG_INTERLACE_NONE) png_set_interlace_handling(state.png);
        png_read_update_info(state.png, state.info);
        pixels.resize(static_cast<std::size_t>(width) * height);
        rows.resize(height);
        for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width;
        png_read_image(state.png, rows.data());
        png_read_end(state.png, nullptr);
    }
    if (wrong_kind) {
        throw std::runtime_error("PNG is not 8-bit grayscale (color type " + std::to_string(color_type) +
                                 ", bit depth " + std::to_string(bit_depth) + ")");
    }
    return PixelGrid(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

} // namespace

std::optional<ImageFormat> format_from_extension(const fs::path& path) {
    const auto ext = lower(path.extension().string());
    if (ext == ".png") return ImageFormat::png_gray8;
    if (ext == ".pgm") return ImageFormat::pgm_binary;
    return std::nullopt;
}

std::vector<unsigned char> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("error reading '" + path.string() + "'");
    return bytes;
}

PixelGrid decode_image(const std::vector<unsigned char>& bytes) {
    static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin()))
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        if (bytes[1] == '5') return decode_pgm(bytes);
        if (bytes[1] == '6' || bytes[1] == '3') throw std::runtime_error("color PNM input is not supported");
        if (bytes[1] == '2') throw std::runtime_error("ASCII PGM (P2) is not supported; use binary P5");
    }
    throw std::runtime_error("unrecognized image encoding");
}

PixelGrid load_image(const fs::path& path) {
    try {
        return decode_image(read_file_bytes(path));
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<unsigned char> encode_pgm(const PixelGrid& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels().begin(), image.pixels().end());
    return out;
}

std::vector<unsigned char> encode_png(const PixelGrid& image) {
    std::string error;
    std::vector<unsigned char> out;
    PngWriteState state;
    state.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler,
                                        png_warning_handler);
    if (!state.png) throw std::runtime_error("cannot allocate PNG encoder");
    state.info = png_create_info_struct(state.png);
    if (!state.info) throw std::runtime_error("cannot allocate PNG encoder");

    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
    auto* base = const_cast<std::uint8_t*>(image.pixels().data());
    for (int y = 0; y < image.height(); ++y)
        rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width());

    if (setjmp(png_jmpbuf(state.png))) {
        throw std::runtime_error("PNG encoding failed: " + error);
    }
    png_set_write_fn(state.png, &out, png_write_memory, png_flush_noop);
    png_set_compression_level(state.png, 6);
    png_set_IHDR(state.png, state.info, static_cast<png_uint_32>(image.width()),
                 static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(state.png, state.info);
    png_write_image(state.png, rows.data());
    png_write_end(state.png, nullptr);
    return out;
}

void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw std::runtime_error("destination directory '" + dir.string() + "' does not exist");

    fs::path tmp = path;
    tmp += ".tmp-write";
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
        const bool ok = std::fwrite(data, 1, size, f) == size;
        const bool closed = std::fclose(f) == 0;
        if (!ok || !closed) {
            fs::remove(tmp, ec);
            throw std::runtime_error("I/O error writing '" + path.string() + "'");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move '" + tmp.string() + "' into place");
    }
}

void save_image(const PixelGrid& image, const fs::path& path, std::optional<ImageFormat> format) {
    const auto chosen = format ? format : format_from_extension(path);
    if (!chosen) throw std::invalid_argument("cannot infer image format from '" + path.string() + "'");
    const auto bytes = *chosen == ImageFormat::png_gray8 ? encode_png(image) : encode_pgm(image);
    write_file_atomic(path, bytes.data(), bytes.size());
}

} // namespace octwarp
