#pragma once

// Image files for the CLI: PNG (libpng), binary PPM (P6) and the library's
// raw RGB format, chosen by extension.

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "pn/error.hpp"
#include "pn/image_codec.hpp"

namespace pn::tools {

namespace fs = std::filesystem;

inline codec::ImageRGB read_png(const fs::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw UnsupportedFormat(path.string() + ": " + img.message);
    img.format = PNG_FORMAT_RGB;
    codec::ImageRGB out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&img);
        throw UnsupportedFormat(path.string() + ": " + img.message);
    }
    return out;
}

inline void write_png(const fs::path& path, const codec::ImageRGB& rgb) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(rgb.width);
    img.height = static_cast<png_uint_32>(rgb.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.pixels.data(), 0, nullptr))
        throw InvalidInput(path.string() + ": " + img.message);
}

inline codec::ImageRGB read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic;
    auto skip_comments = [&] {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string line;
            std::getline(in, line);
            in >> std::ws;
        }
    };
    skip_comments();
    in >> w;
    skip_comments();
    in >> h;
    skip_comments();
    in >> maxval;
    if (magic != "P6" || !in || w <= 0 || h <= 0 || maxval != 255)
        throw UnsupportedFormat(path.string() + ": only 8-bit binary PPM (P6) is supported");
    in.get();
    codec::ImageRGB img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw TruncatedFile(path.string() + ": short pixel data");
    return img;
}

inline void write_ppm(const fs::path& path, const codec::ImageRGB& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline codec::ImageRGB read_image(const fs::path& path) {
    if (!fs::exists(path)) throw InvalidInput("no such file: " + path.string());
    const auto ext = path.extension().string();
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm") return read_ppm(path);
    return codec::read_raw_rgb(path);
}

inline void write_image(const fs::path& path, const codec::ImageRGB& img) {
    const auto ext = path.extension().string();
    if (ext == ".png") return write_png(path, img);
    if (ext == ".ppm") return write_ppm(path, img);
    codec::write_raw_rgb(path, img);
}

} // namespace pn::tools
