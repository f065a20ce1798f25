#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "supct/raster_io.hpp"
#include "test_util.hpp"

using namespace supct;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path d = fs::temp_directory_path() / ("supct_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                                    "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Raster, HeaderLayout) {
    const Raster r{2, 3, {1, 2, 3, 4, 5, 6}};
    const auto buf = encode_raster(r);
    ASSERT_EQ(buf.size(), 16u + 4 * 6);
    EXPECT_EQ(std::memcmp(buf.data(), "SSRT", 4), 0);
    EXPECT_EQ(buf[4], 1);  // version, little endian
    EXPECT_EQ(buf[5], 0);
    EXPECT_EQ(buf[6], 2);  // rows
    EXPECT_EQ(buf[10], 3);  // cols
    float first;
    std::memcpy(&first, buf.data() + 16, 4);
    EXPECT_EQ(first, 1.0f);
}

TEST(Raster, RoundTripIsFloat32Exact) {
    const Image x = testutil::random_image(5, 7, 3);
    const fs::path dir = temp_dir();
    write_image(dir / "x.ssrt", x);
    const Image y = read_image(dir / "x.ssrt");
    ASSERT_TRUE(y.same_shape(x));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], static_cast<double>(static_cast<float>(x[i])));
    EXPECT_FALSE(fs::exists(dir / "x.ssrt.tmp"));
    fs::remove_all(dir);
}

TEST(Raster, SinogramRoundTrip) {
    const Sinogram s = testutil::random_sinogram(4, 9, 1);
    const fs::path dir = temp_dir();
    write_sinogram(dir / "s.ssrt", s);
    const Sinogram t = read_sinogram(dir / "s.ssrt");
    EXPECT_EQ(t.num_views(), 4u);
    EXPECT_EQ(t.num_bins(), 9u);
    fs::remove_all(dir);
}

TEST(Raster, RejectsCorruptInput) {
    auto buf = encode_raster(Raster{1, 2, {1, 2}});
    auto bad_magic = buf;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_raster(bad_magic), IoError);
    auto truncated = buf;
    truncated.pop_back();
    EXPECT_THROW(decode_raster(truncated), IoError);
    EXPECT_THROW(read_raster("/nonexistent/dir/file.ssrt"), IoError);
}

TEST(Raster, UnwritableDestinationThrows) {
    EXPECT_THROW(write_image("/nonexistent/dir/x.ssrt", Image::square(2)), IoError);
}

TEST(Png, WritesValidFile) {
    const fs::path dir = temp_dir();
    Image x = Image::square(8);
    x(0, 0) = 0.3;
    write_png(dir / "x.png", x);
    std::ifstream in(dir / "x.png", std::ios::binary);
    unsigned char sig[8];
    in.read(reinterpret_cast<char*>(sig), 8);
    const unsigned char expected[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    EXPECT_EQ(std::memcmp(sig, expected, 8), 0);
    fs::remove_all(dir);
}
