#include "depthprop/io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

namespace depthprop {
namespace {

using io::FormatError;
using testing::TempDir;

void write_bytes(const std::filesystem::path& p, const std::string& bytes)
{
    std::ofstream(p, std::ios::binary) << bytes;
}

std::string read_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string be16(std::uint16_t v)
{
    return {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
}

std::size_t error_offset(const std::function<void()>& f)
{
    try {
        f();
    } catch (const FormatError& e) {
        return e.offset();
    }
    ADD_FAILURE() << "no FormatError";
    return 0;
}

TEST(FloatMap, RoundTripIsBitIdentical)
{
    TempDir dir;
    DepthField f(2, 2);
    f << 1.5, 2.25, 3.0, 0.125;
    io::write_depth(f, dir / "d.pfm");
    const DepthField back = io::read_dense_depth(dir / "d.pfm");
    EXPECT_TRUE((back == f).all());
}

TEST(FloatMap, RandomFloatValuesRoundTrip)
{
    TempDir dir;
    std::mt19937_64 rng(1);
    const DepthField f = testing::random_field(7, 13, rng, 0.1, 80.0).cast<float>().cast<double>();
    io::write_depth(f, dir / "d.pfm");
    EXPECT_TRUE((io::read_dense_depth(dir / "d.pfm") == f).all());
    io::write_luminance(f, dir / "l.pfm");
    EXPECT_TRUE((io::read_luminance(dir / "l.pfm") == f).all());
}

TEST(FloatMap, LayoutIsBottomUpWithEndianScale)
{
    TempDir dir;
    DepthField f(2, 1);
    f << 1.0, 2.0;
    io::write_depth(f, dir / "d.pfm");
    const std::string bytes = read_bytes(dir / "d.pfm");
    const std::string header = std::endian::native == std::endian::little ? "Pf\n1 2\n-1.0\n" : "Pf\n1 2\n1.0\n";
    ASSERT_EQ(bytes.substr(0, header.size()), header);
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + header.size(), 4);
    EXPECT_EQ(first, 2.0f);  // bottom row first
    const io::DepthFileHeader h = io::read_depth_header(dir / "d.pfm");
    EXPECT_EQ(h.format, io::DepthFormat::float_map);
    EXPECT_EQ(h.height, 2);
    EXPECT_EQ(h.width, 1);
}

TEST(FloatMap, ReadsBigEndianPayload)
{
    TempDir dir;
    // 1x1 map holding 2.0f in big-endian order.
    write_bytes(dir / "be.pfm", std::string("Pf\n1 1\n1.0\n") + std::string("\x40\x00\x00\x00", 4));
    EXPECT_EQ(io::read_dense_depth(dir / "be.pfm")(0, 0), 2.0);
}

TEST(FloatMap, ZeroEntriesYieldSparse)
{
    TempDir dir;
    DepthField f = DepthField::Zero(3, 3);
    f(1, 2) = 4.5;
    io::write_depth(f, dir / "s.pfm");
    const io::DepthData data = io::read_depth(dir / "s.pfm");
    ASSERT_TRUE(std::holds_alternative<SparseDepth>(data));
    const auto& s = std::get<SparseDepth>(data);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.samples()[0], (SparseSample{1, 2, 4.5}));
    EXPECT_THROW(io::read_dense_depth(dir / "s.pfm"), FormatError);
}

TEST(FloatMap, TruncatedPayloadReportsOffset)
{
    TempDir dir;
    const std::string header = "Pf\n2 2\n-1.0\n";
    write_bytes(dir / "t.pfm", header + std::string(10, '\0'));
    EXPECT_EQ(error_offset([&] { io::read_depth(dir / "t.pfm"); }), header.size() + 10);
}

TEST(FloatMap, NonFiniteValueReportsOffset)
{
    TempDir dir;
    const std::string header = "Pf\n2 1\n-1.0\n";
    const float values[2] = {1.0f, std::numeric_limits<float>::infinity()};
    std::string payload(8, '\0');
    std::memcpy(payload.data(), values, 8);
    if (std::endian::native != std::endian::little)
        GTEST_SKIP();
    write_bytes(dir / "n.pfm", header + payload);
    EXPECT_EQ(error_offset([&] { io::read_depth(dir / "n.pfm"); }), header.size() + 4);
}

TEST(FloatMap, RefusesOversizedHeaders)
{
    TempDir dir;
    write_bytes(dir / "big.pfm", "Pf\n100000 3\n-1.0\n");
    EXPECT_THROW(io::read_depth(dir / "big.pfm"), FormatError);
    write_bytes(dir / "small.pfm", "Pf\n40 3\n-1.0\n" + std::string(40 * 3 * 4, '\0'));
    EXPECT_THROW(io::read_depth(dir / "small.pfm", {.maxSide = 32}), FormatError);
}

TEST(Quantized, RawValueScalesToMeters)
{
    TempDir dir;
    write_bytes(dir / "q.pgm", "P5\n2 1\n65535\n" + be16(512) + be16(256));
    const DepthField d = io::read_dense_depth(dir / "q.pgm");
    EXPECT_EQ(d(0, 0), 2.0);
    EXPECT_EQ(d(0, 1), 1.0);
    EXPECT_EQ(io::read_depth_header(dir / "q.pgm").scale, 1.0 / 256.0);
}

TEST(Quantized, RawZeroIsMissing)
{
    TempDir dir;
    write_bytes(dir / "q.pgm", "P5\n2 2\n65535\n" + be16(0) + be16(300) + be16(0) + be16(1));
    const SparseDepth s = io::read_sparse_depth(dir / "q.pgm");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.samples()[0], (SparseSample{0, 1, 300.0 / 256.0}));
    EXPECT_EQ(s.samples()[1], (SparseSample{1, 1, 1.0 / 256.0}));
}

TEST(Quantized, RoundTripWithinHalfStep)
{
    TempDir dir;
    std::mt19937_64 rng(2);
    const DepthField f = testing::random_field(9, 11, rng, 0.5, 80.0);
    const io::DepthFileHeader header{.format = io::DepthFormat::quantized_16bit, .scale = 1.0 / 256.0};
    io::write_depth(f, dir / "q.pgm", header);
    const DepthField back = io::read_dense_depth(dir / "q.pgm");
    EXPECT_LE((back - f).abs().maxCoeff(), header.scale / 2.0);

    // A custom scale survives the trip.
    const io::DepthFileHeader coarse{.format = io::DepthFormat::quantized_16bit, .scale = 0.01};
    io::write_depth(f, dir / "c.pgm", coarse);
    EXPECT_EQ(io::read_depth_header(dir / "c.pgm").scale, 0.01);
    EXPECT_LE((io::read_dense_depth(dir / "c.pgm") - f).abs().maxCoeff(), 0.005 + 1e-12);
}

TEST(Quantized, SparseWriteReadsBack)
{
    TempDir dir;
    const SparseDepth s(4, 5, {{0, 1, 2.0}, {3, 4, 7.5}});
    io::write_depth(s, dir / "s.pgm", {.format = io::DepthFormat::quantized_16bit});
    EXPECT_EQ(io::read_sparse_depth(dir / "s.pgm"), s);
    io::write_depth(s, dir / "s.pfm");
    EXPECT_EQ(io::read_sparse_depth(dir / "s.pfm"), s);
}

TEST(Quantized, OutOfRangeDepthIsRejected)
{
    TempDir dir;
    const DepthField f = DepthField::Constant(2, 2, 300.0);
    EXPECT_THROW(io::write_depth(f, dir / "q.pgm", {.format = io::DepthFormat::quantized_16bit}), InvalidInput);
}

TEST(Quantized, TruncatedPayloadReportsOffset)
{
    TempDir dir;
    const std::string header = "P5\n3 3\n65535\n";
    write_bytes(dir / "t.pgm", header + std::string(7, '\1'));
    EXPECT_EQ(error_offset([&] { io::read_depth(dir / "t.pgm"); }), header.size() + 7);
}

TEST(Header, MalformedInputs)
{
    TempDir dir;
    write_bytes(dir / "a", "P6\n1 1\n255\n\0");
    EXPECT_THROW(io::read_depth(dir / "a"), FormatError);
    write_bytes(dir / "b", "Pf\nx 1\n-1.0\n");
    EXPECT_THROW(io::read_depth(dir / "b"), FormatError);
    write_bytes(dir / "c", "Pf\n1 1\nscale\n");
    EXPECT_THROW(io::read_depth(dir / "c"), FormatError);
    write_bytes(dir / "d", "P");
    EXPECT_THROW(io::read_depth(dir / "d"), FormatError);
    write_bytes(dir / "e", "Pf\n0 1\n-1.0\n");
    EXPECT_THROW(io::read_depth(dir / "e"), FormatError);
    EXPECT_THROW(io::read_depth(dir / "missing"), std::runtime_error);
}

TEST(Mask, RoundTrips)
{
    TempDir dir;
    const SegmentationMask zero = SegmentationMask::uniform(5, 4);
    io::write_mask(zero, dir / "z.pgm");
    EXPECT_EQ(io::read_mask(dir / "z.pgm"), zero);
    std::mt19937_64 rng(3);
    const SegmentationMask three = testing::random_mask(12, 9, 3, rng);
    io::write_mask(three, dir / "m.pgm");
    EXPECT_EQ(io::read_mask(dir / "m.pgm"), three);
    LabelGrid wide(1, 2);
    wide << 0, 65535;
    io::write_mask(SegmentationMask(wide), dir / "w.pgm");
    EXPECT_EQ(io::read_mask(dir / "w.pgm").labels()(0, 1), 65535);
}

TEST(Mask, EightBitInputIsWidened)
{
    TempDir dir;
    std::string payload;
    for (int v = 0; v < 6; ++v)
        payload.push_back(static_cast<char>(v * 50));
    write_bytes(dir / "m8.pgm", "P5\n3 2\n255\n" + payload);
    const SegmentationMask m = io::read_mask(dir / "m8.pgm");
    for (Eigen::Index i = 0; i < 6; ++i)
        EXPECT_EQ(m.labels().data()[i], static_cast<std::int32_t>(i * 50));
    // Widened labels round-trip through the 16-bit writer unchanged.
    io::write_mask(m, dir / "m16.pgm");
    EXPECT_EQ(io::read_mask(dir / "m16.pgm"), m);
}

TEST(Mask, RejectsFloatMaps)
{
    TempDir dir;
    io::write_depth(DepthField::Ones(2, 2), dir / "d.pfm");
    EXPECT_THROW(io::read_mask(dir / "d.pfm"), FormatError);
}

TEST(SparseCsv, SingleLine)
{
    TempDir dir;
    write_bytes(dir / "s.csv", "0,0,1.5\n");
    const SparseDepth s = io::read_sparse_csv(dir / "s.csv", 2, 2);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.samples()[0], (SparseSample{0, 0, 1.5}));
}

TEST(SparseCsv, RoundTripIsOrderIndependent)
{
    TempDir dir;
    std::mt19937_64 rng(4);
    std::vector<SparseSample> samples;
    std::vector<PixelIndex> pixels(40 * 30);
    std::iota(pixels.begin(), pixels.end(), 0);
    std::shuffle(pixels.begin(), pixels.end(), rng);
    std::uniform_real_distribution<double> depth(0.1, 80.0);
    for (int i = 0; i < 500; ++i)
        samples.push_back({pixels[i] / 30, pixels[i] % 30, depth(rng)});
    const SparseDepth s(40, 30, samples);
    io::write_sparse_csv(s, dir / "s.csv");
    const SparseDepth back = io::read_sparse_csv(dir / "s.csv", 40, 30);
    EXPECT_EQ(back.size(), 500u);
    EXPECT_EQ(back, s);

    // Shuffled line order reads back to the same set.
    std::shuffle(samples.begin(), samples.end(), rng);
    std::string text;
    for (const auto& x : samples) {
        char buf[32];
        const auto end = std::to_chars(buf, buf + sizeof(buf), x.depth).ptr;
        text += std::to_string(x.row) + "," + std::to_string(x.col) + "," + std::string(buf, end) + "\n";
    }
    write_bytes(dir / "shuffled.csv", text);
    EXPECT_EQ(io::read_sparse_csv(dir / "shuffled.csv", 40, 30), s);
}

TEST(SparseCsv, ErrorsCarryLineNumbers)
{
    TempDir dir;
    const std::vector<std::pair<std::string, std::size_t>> cases = {
        {"row,col,depth_m\n0,0,1.0\n0,0,2.0\n", 3},  // duplicate
        {"0,0,1.0\n1,1\n", 2},                       // missing field
        {"0,0,1.0\n0,1,2.0\n1,x,3.0\n", 3},          // not a number
        {"5,0,1.0\n", 1},                            // outside the grid
        {"0,0,-1.0\n", 1},                           // non-positive depth
        {"0,0,1.0,7\n", 1},                          // extra field
    };
    for (const auto& [text, line] : cases) {
        write_bytes(dir / "bad.csv", text);
        EXPECT_EQ(error_offset([&] { io::read_sparse_csv(dir / "bad.csv", 3, 3); }), line) << text;
    }
}

}  // namespace
}  // namespace depthprop
