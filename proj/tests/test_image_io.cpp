#include <doctest.h>

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tsgm/image_io.hpp"

using namespace tsgm;

namespace {

// Minimal RGB writer so the reader's color handling can be exercised without
// adding a color path to the library itself.
void write_rgb_png(const std::string& path, int w, int h,
                   const std::vector<std::array<std::uint8_t, 3>>& pixels) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    REQUIRE(fp != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            row[x * 3 + 0] = pixels[y * w + x][0];
            row[x * 3 + 1] = pixels[y * w + x][1];
            row[x * 3 + 2] = pixels[y * w + x][2];
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

TEST_CASE("8-bit PNG round-trip") {
    oracle::TempDir tmp;
    std::mt19937 rng(81);
    const GrayImage img = oracle::random_gray(37, 23, rng);
    const std::string path = tmp.path + "/img.png";
    io::write_gray_png(path, img);
    CHECK(io::read_gray(path) == img);
}

TEST_CASE("16-bit PNG round-trip") {
    oracle::TempDir tmp;
    std::mt19937 rng(82);
    Image<std::uint16_t> img(19, 11);
    std::uniform_int_distribution<int> dist(0, 65535);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 19; ++x)
            img(x, y) = static_cast<std::uint16_t>(dist(rng));
    const std::string path = tmp.path + "/img16.png";
    io::write_gray16_png(path, img);
    CHECK(io::read_gray16_png(path) == img);
}

TEST_CASE("binary PGM input") {
    oracle::TempDir tmp;
    const std::string path = tmp.path + "/img.pgm";
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n3 2\n255\n";
        const unsigned char data[6] = {0, 50, 100, 150, 200, 250};
        out.write(reinterpret_cast<const char*>(data), 6);
    }
    const GrayImage img = io::read_gray(path);
    REQUIRE(img.width() == 3);
    REQUIRE(img.height() == 2);
    CHECK(img(0, 0) == 0);
    CHECK(img(2, 0) == 100);
    CHECK(img(1, 1) == 200);

    SUBCASE("comments in the header are skipped") {
        const std::string cpath = tmp.path + "/c.pgm";
        std::ofstream out(cpath, std::ios::binary);
        out << "P5\n# a comment line\n2 1\n255\n";
        const unsigned char data[2] = {7, 9};
        out.write(reinterpret_cast<const char*>(data), 2);
        out.close();
        const GrayImage c = io::read_gray(cpath);
        CHECK(c(0, 0) == 7);
        CHECK(c(1, 0) == 9);
    }
}

TEST_CASE("color PNG input converts by Rec.601 luma") {
    oracle::TempDir tmp;
    const std::string path = tmp.path + "/rgb.png";
    const std::vector<std::array<std::uint8_t, 3>> pixels = {
        {255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {90, 180, 40}};
    write_rgb_png(path, 2, 2, pixels);
    const GrayImage img = io::read_gray(path);
    CHECK(static_cast<int>(img(0, 0)) ==
          static_cast<int>(std::lround(0.299 * 255)));
    CHECK(static_cast<int>(img(1, 0)) ==
          static_cast<int>(std::lround(0.587 * 255)));
    CHECK(static_cast<int>(img(0, 1)) ==
          static_cast<int>(std::lround(0.114 * 255)));
    CHECK(static_cast<int>(img(1, 1)) ==
          static_cast<int>(std::lround(0.299 * 90 + 0.587 * 180 + 0.114 * 40)));
}

TEST_CASE("bit-depth strictness") {
    oracle::TempDir tmp;
    std::mt19937 rng(83);
    const std::string p8 = tmp.path + "/a.png";
    const std::string p16 = tmp.path + "/b.png";
    io::write_gray_png(p8, oracle::random_gray(8, 8, rng));
    io::write_gray16_png(p16, Image<std::uint16_t>(8, 8, 4000));

    CHECK_THROWS(io::read_gray(p16));      // 16-bit rejected by the 8-bit reader
    CHECK_THROWS(io::read_gray16_png(p8)); // 8-bit rejected by the 16-bit reader
}

TEST_CASE("unreadable paths and garbage bytes are errors") {
    oracle::TempDir tmp;
    CHECK_THROWS(io::read_gray(tmp.path + "/missing.png"));
    const std::string junk = tmp.path + "/junk.png";
    std::ofstream(junk) << "not an image at all";
    CHECK_THROWS(io::read_gray(junk));
    CHECK_THROWS(io::read_gray16_png(junk));
}
