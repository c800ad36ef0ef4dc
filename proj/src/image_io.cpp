#include "tsgm/image_io.hpp"

#include <png.h>

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tsgm::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        throw std::runtime_error("cannot open file: " + path);
    return f;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// ---- PGM (P5, maxval <= 255) ----

int pgm_next_int(std::FILE* f, const std::string& path) {
    int c;
    for (;;) {
        c = std::fgetc(f);
        if (c == '#') {  // comment runs to end of line
            while (c != '\n' && c != EOF)
                c = std::fgetc(f);
        } else if (!std::isspace(c)) {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c))
        fail(path, "malformed PGM header");
    int value = 0;
    while (std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 24)
            fail(path, "malformed PGM header");
        c = std::fgetc(f);
    }
    return value;
}

GrayImage read_pgm(std::FILE* f, const std::string& path) {
    char magic[2];
    if (std::fread(magic, 1, 2, f) != 2 || magic[0] != 'P' || magic[1] != '5')
        fail(path, "not a binary PGM");
    const int width = pgm_next_int(f, path);
    const int height = pgm_next_int(f, path);
    const int maxval = pgm_next_int(f, path);
    if (width <= 0 || height <= 0)
        fail(path, "bad PGM dimensions");
    if (maxval <= 0 || maxval > 255)
        fail(path, "PGM maxval exceeds 8 bits");
    // header terminates with exactly one whitespace byte, already consumed by
    // the last pgm_next_int call
    GrayImage img(width, height);
    if (std::fread(img.data(), 1, img.pixel_count(), f) != img.pixel_count())
        fail(path, "truncated PGM pixel data");
    return img;
}

// ---- PNG ----

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png)
            png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png)
            png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

void begin_read(PngReader& r, std::FILE* f, const std::string& path) {
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (r.png)
        r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info)
        fail(path, "libpng allocation failed");
    if (setjmp(png_jmpbuf(r.png)))
        fail(path, "PNG decode error");
    png_init_io(r.png, f);
    png_read_info(r.png, r.info);
}

constexpr bool kLittleEndianHost = std::endian::native == std::endian::little;

}  // namespace

GrayImage read_gray(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, f.get()) != 2)
        fail(path, "empty file");
    std::rewind(f.get());

    if (magic[0] == 'P' && magic[1] == '5')
        return read_pgm(f.get(), path);
    if (!(magic[0] == 0x89 && magic[1] == 'P'))
        fail(path, "unsupported image format (expected PGM or PNG)");

    PngReader r;
    begin_read(r, f.get(), path);
    if (setjmp(png_jmpbuf(r.png)))
        fail(path, "PNG decode error");

    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);
    if (bit_depth == 16)
        fail(path, "16-bit PNG where 8-bit grayscale was expected");
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(r.png);
    if (color_type & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    const int width = static_cast<int>(png_get_image_width(r.png, r.info));
    const int height = static_cast<int>(png_get_image_height(r.png, r.info));
    const int channels = png_get_channels(r.png, r.info);
    if (channels != 1 && channels != 3)
        fail(path, "unsupported PNG channel layout");

    std::vector<unsigned char> rowbuf(static_cast<std::size_t>(width) * channels);
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y) {
        png_read_row(r.png, rowbuf.data(), nullptr);
        if (channels == 1) {
            std::memcpy(img.row(y), rowbuf.data(), width);
        } else {
            std::uint8_t* dst = img.row(y);
            for (int x = 0; x < width; ++x) {
                const unsigned r8 = rowbuf[3 * x + 0];
                const unsigned g8 = rowbuf[3 * x + 1];
                const unsigned b8 = rowbuf[3 * x + 2];
                dst[x] = static_cast<std::uint8_t>((299u * r8 + 587u * g8 + 114u * b8 + 500u) / 1000u);
            }
        }
    }
    png_read_end(r.png, nullptr);
    return img;
}

Image<std::uint16_t> read_gray16_png(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    PngReader r;
    begin_read(r, f.get(), path);
    if (setjmp(png_jmpbuf(r.png)))
        fail(path, "PNG decode error");

    if (png_get_bit_depth(r.png, r.info) != 16 ||
        png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY)
        fail(path, "expected 16-bit single-channel PNG");
    if (kLittleEndianHost)
        png_set_swap(r.png);
    png_read_update_info(r.png, r.info);

    const int width = static_cast<int>(png_get_image_width(r.png, r.info));
    const int height = static_cast<int>(png_get_image_height(r.png, r.info));
    Image<std::uint16_t> img(width, height);
    for (int y = 0; y < height; ++y)
        png_read_row(r.png, reinterpret_cast<png_bytep>(img.row(y)), nullptr);
    png_read_end(r.png, nullptr);
    return img;
}

namespace {

void write_png_impl(const std::string& path, int width, int height, int bit_depth,
                    const unsigned char* const* rows) {
    FilePtr f = open_file(path, "wb");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (w.png)
        w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info)
        fail(path, "libpng allocation failed");
    if (setjmp(png_jmpbuf(w.png)))
        fail(path, "PNG encode error");
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    if (bit_depth == 16 && kLittleEndianHost)
        png_set_swap(w.png);
    for (int y = 0; y < height; ++y)
        png_write_row(w.png, const_cast<png_bytep>(rows[y]));
    png_write_end(w.png, nullptr);
}

}  // namespace

void write_gray_png(const std::string& path, const GrayImage& img) {
    std::vector<const unsigned char*> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = img.row(y);
    write_png_impl(path, img.width(), img.height(), 8, rows.data());
}

void write_gray16_png(const std::string& path, const Image<std::uint16_t>& img) {
    std::vector<const unsigned char*> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = reinterpret_cast<const unsigned char*>(img.row(y));
    write_png_impl(path, img.width(), img.height(), 16, rows.data());
}

}  // namespace tsgm::io
