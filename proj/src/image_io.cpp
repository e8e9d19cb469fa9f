#include "ptp/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace ptp {

namespace {

struct Decoded {
    int width = 0;
    int height = 0;
    int channels = 0; // 1..4 after normalisation to 8-bit
    std::vector<std::uint8_t> pixels;
};

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Decoded decode(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw Error("cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng initialisation failed");
    }
    Decoded out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("corrupt PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    const auto rowbytes = png_get_rowbytes(png, info);
    out.pixels.resize(rowbytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y)
        rows[y] = out.pixels.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_rows(const std::filesystem::path& path, int width, int height, int color_type,
                const std::uint8_t* data, std::size_t stride) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw Error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed writing PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(data + stride * y));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    buf->insert(buf->end(), data, data + len);
}

} // namespace

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage read_gray_png(const std::filesystem::path& path) {
    const Decoded d = decode(path);
    std::vector<std::uint8_t> gray(static_cast<std::size_t>(d.width) * d.height);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const std::uint8_t* p = d.pixels.data() + i * d.channels;
        gray[i] = d.channels >= 3 ? luminance(p[0], p[1], p[2]) : p[0];
    }
    return GrayImage(d.width, d.height, std::move(gray));
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
    const Decoded d = decode(path);
    BinaryMask m(d.width, d.height);
    const int color_channels = (d.channels == 2 || d.channels == 4) ? d.channels - 1 : d.channels;
    auto md = m.data();
    for (std::size_t i = 0; i < md.size(); ++i) {
        const std::uint8_t* p = d.pixels.data() + i * d.channels;
        bool fg = false;
        for (int c = 0; c < color_channels; ++c)
            fg = fg || p[c] != 0;
        md[i] = fg ? 1 : 0;
    }
    return m;
}

void write_png(const std::filesystem::path& path, const GrayImage& img) {
    write_rows(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, img.data().data(), img.width());
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
    std::vector<std::uint8_t> px(mask.size());
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = mask[i] ? 255 : 0;
    write_rows(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, px.data(), mask.width());
}

void write_rgb_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw Error("write_rgb_png: buffer size mismatch");
    write_rows(path, width, height, PNG_COLOR_TYPE_RGB, rgb.data(), static_cast<std::size_t>(width) * 3);
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    std::vector<std::uint8_t> buf;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed encoding PNG");
    }
    png_set_write_fn(png, &buf, append_bytes, nullptr);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y)
        png_write_row(png, const_cast<png_bytep>(img.data().data() + static_cast<std::size_t>(y) * img.width()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return buf;
}

} // namespace ptp
