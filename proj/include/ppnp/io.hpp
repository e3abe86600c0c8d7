#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ppnp/core.hpp"
#include "ppnp/kernel.hpp"
#include "ppnp/preprocess.hpp"

namespace ppnp::io {

/// 8-byte magic ("PLDF1" padded with zeros) of the float grid format, followed
/// by little-endian u32 width and u32 height, then row-major float32 samples.
inline constexpr char kFloatGridMagic[8] = {'P', 'L', 'D', 'F', '1', '\0', '\0', '\0'};
inline constexpr std::size_t kFloatGridHeaderBytes = 16;
inline constexpr std::uint32_t kMaxDimension = 1u << 15;

enum class ImageFormat { Pgm8, Pgm16, FloatGrid };

/// Chooses by extension: ".pgm" gives 8-bit PGM, anything else the float grid.
ImageFormat format_for_path(const std::filesystem::path& path);

/// Loads a PGM (P5, 8 or 16 bit) or float grid file. PGM samples are divided
/// by maxval when loading SceneUnit images and kept as integers for
/// PhotonCount images; float grids are taken verbatim.
Image<double> load_image(const std::filesystem::path& path, Domain domain);

/// Writes an image. PGM output quantizes: SceneUnit values map to
/// round(v * maxval), PhotonCount values to round(v), both clamped.
void save_image(const std::filesystem::path& path, const Image<double>& img, ImageFormat format);
void save_image(const std::filesystem::path& path, const Image<double>& img);

/// Whitespace-separated taps, one kernel row per line. Taps are normalized to
/// unit sum; negative taps are rejected.
BlurKernel<double> load_kernel(const std::filesystem::path& path);
BlurKernel<double> parse_kernel_text(const std::string& text);
void save_kernel(const std::filesystem::path& path, const BlurKernel<double>& kernel);

/// Kernel from a file path or an inline "gauss:size,sigma_x,sigma_y,theta"
/// (sigma_y and theta optional).
BlurKernel<double> kernel_from_spec(const std::string& spec);

/// FNV-1a over the float64 taps, printed as 16 hex digits.
std::string kernel_hash(const BlurKernel<double>& kernel);

/// Sidecar metadata: key=value lines with width, height, black_level, gain.
struct RawMetadata {
  Eigen::Index width = 0, height = 0;
  int black_level = kDefaultBlackLevel;
  double gain = kDefaultGain;
};

RawMetadata load_raw_metadata(const std::filesystem::path& path);

/// Planar little-endian uint16 samples, width * height of them.
RawFrame load_raw(const std::filesystem::path& data_path, const RawMetadata& meta);
void save_raw(const std::filesystem::path& data_path, const std::filesystem::path& meta_path,
              const RawFrame& frame);

}  // namespace ppnp::io
