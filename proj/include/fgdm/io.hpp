// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fgdm/image.hpp"

namespace fgdm {

/// Loads a 16-bit (or 8-bit) grayscale PNG, or a raw `.f32` file with its
/// `.json` sidecar. The format is chosen by extension.
ImageGrid load_image(const std::filesystem::path& path);

/// Writes PNG or raw by extension. Values must lie in [0,1]; excursions up
/// to 1e-6 are clamped, anything further is a RangeError.
void save_image(const ImageGrid& img, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const ImageGrid& img);
ImageGrid decode_png(std::span<const std::uint8_t> bytes);

/// Raw little-endian float32 plus `{height, width, dtype: "f32le"}` sidecar.
/// No range check, so noisy intermediates can be dumped too.
void save_raw(const ImageGrid& img, const std::filesystem::path& f32_path);
ImageGrid load_raw(const std::filesystem::path& f32_path);

std::vector<std::uint8_t> encode_raw(const ImageGrid& img);
ImageGrid decode_raw(std::span<const std::uint8_t> bytes, int height, int width);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws FormatError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);
/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace fgdm
