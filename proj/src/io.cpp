// SPDX-License-Identifier: Apache-2.0
#include "fgdm/io.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <string>

#include "fgdm/errors.hpp"

namespace fgdm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "raw float IO assumes a little-endian host");

struct PngReadState {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

struct PngErrorSink {
    char message[256] = {};
};

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
    if (sink) std::snprintf(sink->message, sizeof sink->message, "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep out, png_size_t n) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + n > st->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, st->bytes.data() + st->pos, n);
    st->pos += n;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void png_flush_fn(png_structp) {}

bool has_ext(const fs::path& p, const char* ext) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

ImageGrid checked_for_save(const ImageGrid& img) {
    if (img.empty()) throw ArgumentError("cannot save an empty image");
    ImageGrid out = img;
    for (double& v : out.values()) {
        if (!std::isfinite(v) || v < -1e-6 || v > 1.0 + 1e-6)
            throw RangeError("pixel value " + std::to_string(v) + " outside [0,1]");
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

ImageGrid decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");

    PngErrorSink sink;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_fn, png_warning_fn);
    if (!png) throw Error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("png_create_info_struct failed");
    }

    PngReadState state{bytes, 0};
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    // Only trivially destructible locals are touched between setjmp and longjmp.
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    bool color = false;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(std::string("PNG decode failed: ") + sink.message);
    }
    png_set_read_fn(png, &state, png_read_fn);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    color = (color_type & PNG_COLOR_MASK_COLOR) != 0 || color_type == PNG_COLOR_TYPE_PALETTE;
    if (!color) {
        if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (bit_depth == 16) png_set_swap(png);  // little-endian host words
        png_read_update_info(png, info);
        const std::size_t rowbytes = png_get_rowbytes(png, info);
        pixels.resize(rowbytes * height);
        rows.resize(height);
        for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (color) throw FormatError("PNG is not single-channel grayscale");
    if (width == 0 || height == 0) throw FormatError("PNG has zero size");

    ImageGrid img(static_cast<int>(height), static_cast<int>(width));
    auto v = img.values();
    if (bit_depth == 16) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::uint16_t s;
            std::memcpy(&s, pixels.data() + 2 * i, 2);
            v[i] = s / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = pixels[i] / 255.0;
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const ImageGrid& img) {
    const ImageGrid src = checked_for_save(img);
    const int w = src.width(), h = src.height();
    std::vector<std::uint16_t> words(src.size());
    auto v = src.values();
    for (std::size_t i = 0; i < v.size(); ++i)
        words[i] = static_cast<std::uint16_t>(std::lround(v[i] * 65535.0));
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(words.data() + static_cast<std::size_t>(y) * w);

    std::vector<std::uint8_t> out;
    PngErrorSink sink;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_fn, png_warning_fn);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(std::string("PNG encode failed: ") + sink.message);
    }
    png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::vector<std::uint8_t> encode_raw(const ImageGrid& img) {
    std::vector<std::uint8_t> bytes(img.size() * 4);
    auto v = img.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const float f = static_cast<float>(v[i]);
        std::memcpy(bytes.data() + 4 * i, &f, 4);
    }
    return bytes;
}

ImageGrid decode_raw(std::span<const std::uint8_t> bytes, int height, int width) {
    if (height <= 0 || width <= 0) throw FormatError("raw header has non-positive dimensions");
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (bytes.size() != n * 4)
        throw FormatError("raw payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(n * 4));
    ImageGrid img(height, width);
    auto v = img.values();
    for (std::size_t i = 0; i < n; ++i) {
        float f;
        std::memcpy(&f, bytes.data() + 4 * i, 4);
        if (!std::isfinite(f)) throw FormatError("raw payload contains non-finite values");
        v[i] = f;
    }
    return img;
}

void save_raw(const ImageGrid& img, const fs::path& f32_path) {
    write_file(f32_path, encode_raw(img));
    const json meta = {{"height", img.height()}, {"width", img.width()}, {"dtype", "f32le"}};
    const std::string text = meta.dump(2) + "\n";
    fs::path sidecar = f32_path;
    sidecar.replace_extension(".json");
    write_file(sidecar, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ImageGrid load_raw(const fs::path& f32_path) {
    fs::path sidecar = f32_path;
    sidecar.replace_extension(".json");
    const auto meta_bytes = read_file(sidecar);
    json meta;
    try {
        meta = json::parse(meta_bytes.begin(), meta_bytes.end());
        if (meta.value("dtype", std::string("f32le")) != "f32le")
            throw FormatError("unsupported raw dtype in " + sidecar.string());
        return decode_raw(read_file(f32_path), meta.at("height").get<int>(), meta.at("width").get<int>());
    } catch (const json::exception& e) {
        throw FormatError("bad sidecar " + sidecar.string() + ": " + e.what());
    }
}

ImageGrid load_image(const fs::path& path) {
    if (has_ext(path, ".f32")) return load_raw(path);
    if (has_ext(path, ".png")) return decode_png(read_file(path));
    throw FormatError("unsupported image extension: " + path.string());
}

void save_image(const ImageGrid& img, const fs::path& path) {
    if (has_ext(path, ".f32")) {
        save_raw(checked_for_save(img), path);
    } else if (has_ext(path, ".png")) {
        write_file(path, encode_png(img));
    } else {
        throw FormatError("unsupported image extension: " + path.string());
    }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw FormatError("base64: length is not a multiple of 4");
    for (char c : text)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/' || c == '='))
            throw FormatError("base64: invalid character");
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw FormatError("base64: decode failed");
    // EVP_DecodeBlock keeps the zero bytes that stand in for padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(bytes.data(), bytes.size(), md);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned char b : md) {
        s += hex[b >> 4];
        s += hex[b & 15];
    }
    return s;
}

}  // namespace fgdm
