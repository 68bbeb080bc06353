#pragma once

#include "depthprop/grid.hpp"

#include <filesystem>
#include <stdexcept>
#include <variant>

namespace depthprop::io {

/// Malformed or inconsistent file content. `offset` is a byte offset for binary formats and a
/// 1-based line number for text formats.
class FormatError : public std::runtime_error {
  public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at " + std::to_string(offset) + ")"), offset_(offset)
    {
    }
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

enum class DepthFormat { float_map, quantized_16bit };

struct DepthFileHeader {
    DepthFormat format = DepthFormat::float_map;
    Eigen::Index height = 0;
    Eigen::Index width = 0;
    double scale = 1.0 / 256.0;  // meters per raw unit, quantized only
    bool littleEndian = true;    // float map only; quantized payloads are always big-endian
};

struct ReadLimits {
    Eigen::Index maxSide = 16384;
};

/// Dense when every pixel carries data, sparse when some pixel is 0 (missing).
using DepthData = std::variant<DepthField, SparseDepth>;

DepthData read_depth(const std::filesystem::path& path, const ReadLimits& limits = {});
/// Header of a depth file without reading the payload.
DepthFileHeader read_depth_header(const std::filesystem::path& path, const ReadLimits& limits = {});

/// Throws FormatError if the file has missing pixels.
DepthField read_dense_depth(const std::filesystem::path& path, const ReadLimits& limits = {});
/// Dense files convert to a sample at every pixel.
SparseDepth read_sparse_depth(const std::filesystem::path& path, const ReadLimits& limits = {});

/// Header height/width are taken from the field. Float maps store 32-bit floats.
void write_depth(const DepthField& field, const std::filesystem::path& path, const DepthFileHeader& header = {});
/// Writes samples into an otherwise zero (missing) map.
void write_depth(const SparseDepth& sparse, const std::filesystem::path& path, const DepthFileHeader& header = {});

/// Single-channel float map holding luminance.
Luminance read_luminance(const std::filesystem::path& path, const ReadLimits& limits = {});
void write_luminance(const Luminance& image, const std::filesystem::path& path);

/// 16-bit binary graymap; 8-bit input is widened.
SegmentationMask read_mask(const std::filesystem::path& path, const ReadLimits& limits = {});
void write_mask(const SegmentationMask& mask, const std::filesystem::path& path);

/// Lines "row,col,depth_m". A header line is optional on read and always written.
/// The grid shape is not stored in the file and must be supplied.
SparseDepth read_sparse_csv(const std::filesystem::path& path, Eigen::Index height, Eigen::Index width);
void write_sparse_csv(const SparseDepth& sparse, const std::filesystem::path& path);

}  // namespace depthprop::io
