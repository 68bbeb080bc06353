#include "depthprop/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace depthprop::io {

namespace {

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

// Whitespace/comment-aware token reader for netpbm-style headers.
class HeaderCursor {
  public:
    explicit HeaderCursor(const std::string& bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const char ch = bytes_[pos_];
            if (ch == '#') {
                const std::size_t start = pos_;
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
                comments_.push_back(bytes_.substr(start + 1, pos_ - start - 1));
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string token()
    {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#')
            ++pos_;
        if (start == pos_)
            throw FormatError("truncated header", pos_);
        return bytes_.substr(start, pos_ - start);
    }

    long long integer()
    {
        const std::size_t at = pos_;
        const std::string t = token();
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size())
            throw FormatError("expected an integer, got '" + t + "'", at);
        return v;
    }

    // The single whitespace byte that separates the header from the payload.
    void end_header()
    {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            throw FormatError("missing whitespace after header", pos_);
        ++pos_;
    }

    const std::vector<std::string>& comments() const { return comments_; }

  private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
    std::vector<std::string> comments_;
};

void check_dims(long long w, long long h, const ReadLimits& limits, std::size_t offset)
{
    if (w < 1 || h < 1)
        throw FormatError("non-positive dimensions " + std::to_string(w) + "x" + std::to_string(h), offset);
    if (w > limits.maxSide || h > limits.maxSide)
        throw FormatError("dimensions " + std::to_string(w) + "x" + std::to_string(h) + " exceed the limit of "
                              + std::to_string(limits.maxSide),
                          offset);
}

void check_payload(const std::string& bytes, std::size_t start, std::size_t need)
{
    if (bytes.size() - start < need)
        throw FormatError("truncated payload: expected " + std::to_string(need) + " bytes, found "
                              + std::to_string(bytes.size() - start),
                          bytes.size());
    if (bytes.size() - start > need)
        throw FormatError("payload longer than the header dimensions", start + need);
}

constexpr const char* kScaleComment = " depthprop-scale ";

struct Pnm {
    DepthFileHeader header;
    long long maxval = 0;
    std::size_t payload = 0;
};

Pnm parse_header(const std::string& bytes, const ReadLimits& limits)
{
    Pnm out;
    if (bytes.size() < 2)
        throw FormatError("file too short for a header", bytes.size());
    HeaderCursor cur(bytes);
    const std::string magic = cur.token();
    if (magic == "Pf") {
        out.header.format = DepthFormat::float_map;
        const std::size_t dimsAt = cur.pos();
        const long long w = cur.integer();
        const long long h = cur.integer();
        check_dims(w, h, limits, dimsAt);
        const std::size_t scaleAt = cur.pos();
        const std::string scaleText = cur.token();
        double scale = 0.0;
        const auto [ptr, ec] = std::from_chars(scaleText.data(), scaleText.data() + scaleText.size(), scale);
        if (ec != std::errc() || ptr != scaleText.data() + scaleText.size() || scale == 0.0 || !std::isfinite(scale))
            throw FormatError("invalid float-map scale '" + scaleText + "'", scaleAt);
        cur.end_header();
        out.header.width = w;
        out.header.height = h;
        out.header.scale = std::abs(scale);
        out.header.littleEndian = scale < 0.0;
        out.payload = cur.pos();
    } else if (magic == "P5") {
        out.header.format = DepthFormat::quantized_16bit;
        const std::size_t dimsAt = cur.pos();
        const long long w = cur.integer();
        const long long h = cur.integer();
        check_dims(w, h, limits, dimsAt);
        const std::size_t maxAt = cur.pos();
        out.maxval = cur.integer();
        if (out.maxval < 1 || out.maxval > 65535)
            throw FormatError("graymap maxval must lie in [1, 65535]", maxAt);
        cur.end_header();
        out.header.width = w;
        out.header.height = h;
        out.header.littleEndian = false;
        for (const auto& c : cur.comments()) {
            if (c.rfind(kScaleComment, 0) == 0) {
                const std::string v = c.substr(std::strlen(kScaleComment));
                double scale = 0.0;
                const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), scale);
                if (ec != std::errc() || !(scale > 0.0) || !std::isfinite(scale))
                    throw FormatError("invalid quantization scale '" + v + "'", 0);
                out.header.scale = scale;
            }
        }
        out.payload = cur.pos();
    } else {
        throw FormatError("unsupported magic '" + magic + "'", 0);
    }
    return out;
}

std::uint16_t load_be16(const std::string& bytes, std::size_t at)
{
    return static_cast<std::uint16_t>((static_cast<unsigned char>(bytes[at]) << 8)
                                      | static_cast<unsigned char>(bytes[at + 1]));
}

// Raw graymap samples in row-major order.
Grid<std::uint16_t> read_graymap(const std::string& bytes, const Pnm& pnm)
{
    const Eigen::Index h = pnm.header.height;
    const Eigen::Index w = pnm.header.width;
    const std::size_t bytesPer = pnm.maxval > 255 ? 2 : 1;
    check_payload(bytes, pnm.payload, static_cast<std::size_t>(h * w) * bytesPer);
    Grid<std::uint16_t> raw(h, w);
    for (Eigen::Index i = 0; i < h * w; ++i) {
        const std::size_t at = pnm.payload + static_cast<std::size_t>(i) * bytesPer;
        const std::uint16_t v = bytesPer == 2 ? load_be16(bytes, at) : static_cast<unsigned char>(bytes[at]);
        if (v > pnm.maxval)
            throw FormatError("sample exceeds maxval", at);
        raw.data()[i] = v;
    }
    return raw;
}

Grid<double> read_float_payload(const std::string& bytes, const Pnm& pnm)
{
    const Eigen::Index h = pnm.header.height;
    const Eigen::Index w = pnm.header.width;
    check_payload(bytes, pnm.payload, static_cast<std::size_t>(h * w) * 4);
    const bool swap = pnm.header.littleEndian != (std::endian::native == std::endian::little);
    Grid<double> out(h, w);
    // Rows are stored bottom-up.
    for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < w; ++c) {
            const std::size_t at = pnm.payload + static_cast<std::size_t>(((h - 1 - r) * w + c) * 4);
            std::uint32_t u = 0;
            std::memcpy(&u, bytes.data() + at, 4);
            if (swap)
                u = __builtin_bswap32(u);
            const float f = std::bit_cast<float>(u);
            if (!std::isfinite(f))
                throw FormatError("non-finite value", at);
            out(r, c) = f;
        }
    }
    return out;
}

std::string float_map_bytes(const Grid<double>& values)
{
    const Eigen::Index h = values.rows();
    const Eigen::Index w = values.cols();
    std::string out = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n"
        + (std::endian::native == std::endian::little ? "-1.0\n" : "1.0\n");
    const std::size_t header = out.size();
    out.resize(header + static_cast<std::size_t>(h * w) * 4);
    for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < w; ++c) {
            const auto f = static_cast<float>(values(r, c));
            if (!std::isfinite(f))
                throw FormatError("cannot store a non-finite value", static_cast<std::size_t>(r * w + c));
            std::memcpy(out.data() + header + static_cast<std::size_t>(((h - 1 - r) * w + c) * 4), &f, 4);
        }
    }
    return out;
}

std::string graymap16_bytes(const Grid<std::uint16_t>& raw, const std::string& comment)
{
    std::string out = "P5\n" + comment + std::to_string(raw.cols()) + " " + std::to_string(raw.rows()) + "\n65535\n";
    const std::size_t header = out.size();
    out.resize(header + static_cast<std::size_t>(raw.size()) * 2);
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        const std::uint16_t v = raw.data()[i];
        out[header + static_cast<std::size_t>(i) * 2] = static_cast<char>(v >> 8);
        out[header + static_cast<std::size_t>(i) * 2 + 1] = static_cast<char>(v & 0xff);
    }
    return out;
}

std::string format_double(double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Grid<double> read_depth_values(const std::filesystem::path& path, const ReadLimits& limits)
{
    const std::string bytes = slurp(path);
    const Pnm pnm = parse_header(bytes, limits);
    if (pnm.header.format == DepthFormat::float_map)
        return read_float_payload(bytes, pnm);
    return read_graymap(bytes, pnm).cast<double>() * pnm.header.scale;
}

}  // namespace

DepthFileHeader read_depth_header(const std::filesystem::path& path, const ReadLimits& limits)
{
    return parse_header(slurp(path), limits).header;
}

DepthData read_depth(const std::filesystem::path& path, const ReadLimits& limits)
{
    Grid<double> values = read_depth_values(path, limits);
    if ((values < 0.0).any())
        throw FormatError("negative depth", 0);
    if ((values > 0.0).all())
        return values;
    std::vector<SparseSample> samples;
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            if (values(r, c) > 0.0)
                samples.push_back({r, c, values(r, c)});
    return SparseDepth(values.rows(), values.cols(), std::move(samples));
}

DepthField read_dense_depth(const std::filesystem::path& path, const ReadLimits& limits)
{
    auto data = read_depth(path, limits);
    if (auto* sparse = std::get_if<SparseDepth>(&data))
        throw FormatError(path.string() + " has " + std::to_string(sparse->height() * sparse->width() - static_cast<Eigen::Index>(sparse->size()))
                              + " missing pixels",
                          0);
    return std::get<DepthField>(std::move(data));
}

SparseDepth read_sparse_depth(const std::filesystem::path& path, const ReadLimits& limits)
{
    auto data = read_depth(path, limits);
    if (auto* sparse = std::get_if<SparseDepth>(&data))
        return std::move(*sparse);
    const auto& dense = std::get<DepthField>(data);
    std::vector<SparseSample> samples;
    samples.reserve(static_cast<std::size_t>(dense.size()));
    for (Eigen::Index r = 0; r < dense.rows(); ++r)
        for (Eigen::Index c = 0; c < dense.cols(); ++c)
            samples.push_back({r, c, dense(r, c)});
    return SparseDepth(dense.rows(), dense.cols(), std::move(samples));
}

void write_depth(const DepthField& field, const std::filesystem::path& path, const DepthFileHeader& header)
{
    if (field.size() == 0)
        throw InvalidInput("cannot write an empty depth field");
    if (header.format == DepthFormat::float_map) {
        spit(path, float_map_bytes(field));
        return;
    }
    if (!(header.scale > 0.0))
        throw InvalidInput("quantization scale must be positive");
    Grid<std::uint16_t> raw(field.rows(), field.cols());
    for (Eigen::Index i = 0; i < field.size(); ++i) {
        const double d = field.data()[i];
        if (!std::isfinite(d) || d < 0.0)
            throw InvalidInput("cannot quantize depth " + format_double(d));
        const double q = std::round(d / header.scale);
        if (q > 65535.0)
            throw InvalidInput("depth " + format_double(d) + " exceeds the 16-bit range at this scale");
        raw.data()[i] = static_cast<std::uint16_t>(q);
    }
    spit(path, graymap16_bytes(raw, "#" + std::string(kScaleComment) + format_double(header.scale) + "\n"));
}

void write_depth(const SparseDepth& sparse, const std::filesystem::path& path, const DepthFileHeader& header)
{
    DepthField field = DepthField::Zero(sparse.height(), sparse.width());
    for (const auto& s : sparse.samples())
        field(s.row, s.col) = s.depth;
    write_depth(field, path, header);
}

Luminance read_luminance(const std::filesystem::path& path, const ReadLimits& limits)
{
    const std::string bytes = slurp(path);
    const Pnm pnm = parse_header(bytes, limits);
    if (pnm.header.format != DepthFormat::float_map)
        throw FormatError("luminance images must be float maps", 0);
    return read_float_payload(bytes, pnm);
}

void write_luminance(const Luminance& image, const std::filesystem::path& path)
{
    spit(path, float_map_bytes(image));
}

SegmentationMask read_mask(const std::filesystem::path& path, const ReadLimits& limits)
{
    const std::string bytes = slurp(path);
    const Pnm pnm = parse_header(bytes, limits);
    if (pnm.header.format != DepthFormat::quantized_16bit)
        throw FormatError("masks must be binary graymaps", 0);
    return SegmentationMask(read_graymap(bytes, pnm).cast<std::int32_t>());
}

void write_mask(const SegmentationMask& mask, const std::filesystem::path& path)
{
    if (mask.max_label() > 65535)
        throw InvalidInput("label " + std::to_string(mask.max_label()) + " does not fit in 16 bits");
    spit(path, graymap16_bytes(mask.labels().cast<std::uint16_t>(), ""));
}

SparseDepth read_sparse_csv(const std::filesystem::path& path, Eigen::Index height, Eigen::Index width)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<SparseSample> samples;
    std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (lineNo == 1 && line.rfind("row", 0) == 0)
            continue;

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw FormatError("expected 'row,col,depth_m'", lineNo);
        long long row = 0, col = 0;
        double depth = 0.0;
        const char* b = line.data();
        auto r1 = std::from_chars(b, b + c1, row);
        auto r2 = std::from_chars(b + c1 + 1, b + c2, col);
        auto r3 = std::from_chars(b + c2 + 1, b + line.size(), depth);
        if (r1.ec != std::errc() || r1.ptr != b + c1 || r2.ec != std::errc() || r2.ptr != b + c2
            || r3.ec != std::errc() || r3.ptr != b + line.size())
            throw FormatError("malformed sample line '" + line + "'", lineNo);
        if (row < 0 || row >= height || col < 0 || col >= width)
            throw FormatError("sample outside the " + std::to_string(height) + "x" + std::to_string(width) + " grid",
                              lineNo);
        if (!std::isfinite(depth) || depth <= 0.0)
            throw FormatError("sample depth must be finite and positive", lineNo);
        if (!seen.emplace(row, col).second)
            throw FormatError("duplicate sample at (" + std::to_string(row) + ", " + std::to_string(col) + ")",
                              lineNo);
        samples.push_back({row, col, depth});
    }
    return SparseDepth(height, width, std::move(samples));
}

void write_sparse_csv(const SparseDepth& sparse, const std::filesystem::path& path)
{
    std::string out = "row,col,depth_m\n";
    for (const auto& s : sparse.samples())
        out += std::to_string(s.row) + "," + std::to_string(s.col) + "," + format_double(s.depth) + "\n";
    spit(path, out);
}

}  // namespace depthprop::io
