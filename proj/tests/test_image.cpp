#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "augscale/error.hpp"
#include "augscale/image.hpp"
#include "augscale/rng.hpp"

using namespace augscale;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "augscale_test_image";
    fs::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("pgm load maps bytes to [0,1]") {
    const std::string path = temp_path("tiny.pgm");
    spit(path, std::string("P5\n2 2\n255\n") + '\x00' + '\xff' + '\x80' + '\x40');
    const Image img = load_image(path);
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.channels == 1);
    CHECK(img.data[0] == doctest::Approx(0.0));
    CHECK(img.data[1] == doctest::Approx(1.0));
    CHECK(img.data[2] == doctest::Approx(128.0 / 255.0));
    CHECK(img.data[3] == doctest::Approx(64.0 / 255.0));
    CHECK(image_valid(img));
}

TEST_CASE("save/load roundtrip is byte-identical for valid 8-bit files") {
    RngStream rng(42, 0);
    SUBCASE("pgm") {
        const std::string path = temp_path("round.pgm");
        std::string payload;
        for (int i = 0; i < 12; ++i) payload.push_back(static_cast<char>(rng.next_u32() & 0xFF));
        spit(path, "P5\n4 3\n255\n" + payload);
        const std::string copy = temp_path("round_copy.pgm");
        save_image(load_image(path), copy);
        CHECK(slurp(path) == slurp(copy));
    }
    SUBCASE("ppm") {
        const std::string path = temp_path("round.ppm");
        std::string payload;
        for (int i = 0; i < 2 * 2 * 3; ++i)
            payload.push_back(static_cast<char>(rng.next_u32() & 0xFF));
        spit(path, "P6\n2 2\n255\n" + payload);
        const std::string copy = temp_path("round_copy.ppm");
        const Image img = load_image(path);
        CHECK(img.channels == 3);
        save_image(img, copy);
        CHECK(slurp(path) == slurp(copy));
    }
}

TEST_CASE("save quantization: round and clamp") {
    Image img(4, 4, 1, 0.5f);
    const std::string path = temp_path("gray.pgm");
    save_image(img, path);
    const std::string bytes = slurp(path);
    const std::string payload = bytes.substr(bytes.size() - 16);
    for (char c : payload) CHECK(static_cast<unsigned char>(c) == 128);

    Image extremes(2, 1, 1);
    extremes.data = {1.0f, -0.0f};
    const std::string path2 = temp_path("extremes.pgm");
    save_image(extremes, path2);
    const std::string bytes2 = slurp(path2);
    CHECK(static_cast<unsigned char>(bytes2[bytes2.size() - 2]) == 255);
    CHECK(static_cast<unsigned char>(bytes2[bytes2.size() - 1]) == 0);
}

TEST_CASE("malformed inputs raise distinct errors") {
    const std::string p4 = temp_path("bad.pbm");
    spit(p4, "P4\n2 2\n");
    CHECK_THROWS_WITH_AS(load_image(p4), doctest::Contains("unsupported format"), DataError);

    const std::string trunc = temp_path("trunc.pgm");
    spit(trunc, std::string("P5\n4 4\n255\n") + "ab");
    CHECK_THROWS_WITH_AS(load_image(trunc), doctest::Contains("truncated payload"), DataError);

    const std::string maxval = temp_path("maxval.pgm");
    spit(maxval, std::string("P5\n1 1\n65535\n") + "aa");
    CHECK_THROWS_WITH_AS(load_image(maxval), doctest::Contains("unsupported maxval"), DataError);

    const std::string header = temp_path("header.pgm");
    spit(header, "P5\nxx 2\n255\n");
    CHECK_THROWS_WITH_AS(load_image(header), doctest::Contains("malformed header"), DataError);

    CHECK_THROWS_AS(load_image(temp_path("missing.pgm")), DataError);
    CHECK_THROWS_AS(save_image(Image(2, 2, 1), "/nonexistent_dir/x.pgm"), DataError);
}

TEST_CASE("header comments are skipped") {
    const std::string path = temp_path("comment.pgm");
    spit(path, std::string("P5\n# a comment\n2 1 # trailing\n255\n") + "ab");
    const Image img = load_image(path);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
}

TEST_CASE("bilinear resize: constants, identity, monotone rows") {
    Image constant(5, 7, 3, 0.37f);
    const Image up = resize_bilinear(constant, 13, 3);
    for (float v : up.data) CHECK(v == 0.37f);
    CHECK(image_valid(up));

    RngStream rng(7, 1);
    Image noise(6, 6, 1);
    for (auto& v : noise.data) v = rng.next_float();
    const Image same = resize_bilinear(noise, 6, 6);
    for (std::size_t i = 0; i < noise.data.size(); ++i)
        CHECK(same.data[i] == doctest::Approx(noise.data[i]).epsilon(1e-6));

    Image ramp(2, 1, 1);
    ramp.data = {0.0f, 1.0f};
    const Image wide = resize_bilinear(ramp, 4, 1);
    for (int x = 1; x < 4; ++x) CHECK(wide.data[x] >= wide.data[x - 1]);

    CHECK_THROWS_AS(resize_bilinear(constant, 0, 4), UsageError);
}

TEST_CASE("bilinear convexity: output stays inside the source range") {
    RngStream rng(11, 2);
    for (int trial = 0; trial < 20; ++trial) {
        Image src(3 + static_cast<int>(rng.next_below(12)), 3 + static_cast<int>(rng.next_below(12)), 1);
        float lo = 1.0f, hi = 0.0f;
        for (auto& v : src.data) {
            v = rng.next_float();
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const int ow = 1 + static_cast<int>(rng.next_below(20));
        const int oh = 1 + static_cast<int>(rng.next_below(20));
        const Image out = resize_bilinear(src, ow, oh);
        for (float v : out.data) {
            CHECK(v >= lo - 1e-6f);
            CHECK(v <= hi + 1e-6f);
        }
    }
}

TEST_CASE("image validator rejects broken rasters") {
    Image bad(2, 2, 1);
    bad.data[1] = 1.5f;
    std::string why;
    CHECK_FALSE(image_valid(bad, &why));
    CHECK(why == "value outside [0,1]");

    Image short_data(2, 2, 1);
    short_data.data.pop_back();
    CHECK_FALSE(image_valid(short_data));
}
