#include "augscale/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "augscale/error.hpp"

namespace augscale {

bool image_valid(const Image& img, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (img.width < 1 || img.height < 1) return fail("non-positive dimensions");
    if (img.channels != 1 && img.channels != 3) return fail("channels must be 1 or 3");
    const std::size_t expect =
        static_cast<std::size_t>(img.width) * img.height * img.channels;
    if (img.data.size() != expect) return fail("data length mismatch");
    for (float v : img.data) {
        if (!std::isfinite(v)) return fail("non-finite value");
        if (v < 0.0f || v > 1.0f) return fail("value outside [0,1]");
    }
    return true;
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments to end of line.
bool next_header_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) return false;
    while (c != EOF && !std::isspace(c) && c != '#') {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c == '#') in.unget();
    return !tok.empty();
}

int parse_header_int(const std::string& tok, const std::string& field) {
    for (char ch : tok) {
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw DataError("malformed header: non-numeric " + field + " '" + tok + "'");
    }
    if (tok.size() > 9) throw DataError("malformed header: oversized " + field);
    return std::stoi(tok);
}

}  // namespace

Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P') throw DataError("unsupported format: missing P5/P6 magic in " + path);
    if (m1 != '5' && m1 != '6')
        throw DataError("unsupported format: magic P" + std::string(1, m1) + " in " + path);
    const int channels = (m1 == '5') ? 1 : 3;

    std::string tok;
    if (!next_header_token(in, tok)) throw DataError("malformed header: missing width in " + path);
    const int w = parse_header_int(tok, "width");
    if (!next_header_token(in, tok)) throw DataError("malformed header: missing height in " + path);
    const int h = parse_header_int(tok, "height");
    if (!next_header_token(in, tok)) throw DataError("malformed header: missing maxval in " + path);
    const int maxval = parse_header_int(tok, "maxval");
    if (w < 1 || h < 1) throw DataError("malformed header: non-positive size in " + path);
    if (maxval != 255) throw DataError("unsupported maxval " + std::to_string(maxval) + " in " + path);
    // header token reader leaves the single separator byte consumed by the
    // trailing isspace check only when unget was not used; normalize here
    if (in.peek() == '#') {
        // comments between maxval and payload are not part of the binary formats
        throw DataError("malformed header: comment before payload in " + path);
    }

    const std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw DataError("truncated payload: expected " + std::to_string(n) + " bytes in " + path);

    Image img(w, h, channels);
    for (std::size_t i = 0; i < n; ++i) img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

void save_image(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const float v = std::round(img.data[i] * 255.0f);
        bytes[i] = static_cast<unsigned char>(std::clamp(v, 0.0f, 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("cannot write file: " + path);
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw UsageError("resize target must be at least 1x1");
    Image out(out_w, out_h, img.channels);
    const float sx = static_cast<float>(img.width) / static_cast<float>(out_w);
    const float sy = static_cast<float>(img.height) / static_cast<float>(out_h);
    for (int oy = 0; oy < out_h; ++oy) {
        float fy = (static_cast<float>(oy) + 0.5f) * sy - 0.5f;
        fy = std::clamp(fy, 0.0f, static_cast<float>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const float wy = fy - static_cast<float>(y0);
        for (int ox = 0; ox < out_w; ++ox) {
            float fx = (static_cast<float>(ox) + 0.5f) * sx - 0.5f;
            fx = std::clamp(fx, 0.0f, static_cast<float>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const float wx = fx - static_cast<float>(x0);
            for (int c = 0; c < img.channels; ++c) {
                // a + (b - a) * t keeps constants exact
                const float top = img.at(x0, y0, c) + (img.at(x1, y0, c) - img.at(x0, y0, c)) * wx;
                const float bot = img.at(x0, y1, c) + (img.at(x1, y1, c) - img.at(x0, y1, c)) * wx;
                out.at(ox, oy, c) = top + (bot - top) * wy;
            }
        }
    }
    return out;
}

}  // namespace augscale
