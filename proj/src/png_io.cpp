#include "gantruth/png_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace gantruth {

namespace {

const std::array<uint8_t, 8> kSig = {137, 80, 78, 71, 13, 10, 26, 10};

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

void push_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

uint32_t read_be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const std::vector<uint8_t>& payload) {
    push_be32(out, uint32_t(payload.size()));
    size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    out.reserve(out.size() + 4);
    push_be32(out, crc32(out.data() + crc_start, out.size() - crc_start));
}

uint32_t adler32(const uint8_t* data, size_t n) {
    uint32_t a = 1, b = 0;
    for (size_t i = 0; i < n; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

// zlib stream of stored (uncompressed) deflate blocks
std::vector<uint8_t> zlib_stored(const std::vector<uint8_t>& raw) {
    std::vector<uint8_t> z;
    z.push_back(0x78);
    z.push_back(0x01);
    size_t off = 0;
    do {
        size_t len = std::min<size_t>(raw.size() - off, 65535);
        bool final = off + len == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(uint8_t(len & 0xff));
        z.push_back(uint8_t(len >> 8));
        z.push_back(uint8_t(~len & 0xff));
        z.push_back(uint8_t((~len >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + long(off), raw.begin() + long(off + len));
        off += len;
    } while (off < raw.size());
    push_be32(z, adler32(raw.data(), raw.size()));
    return z;
}

std::vector<uint8_t> zlib_stored_decode(const uint8_t* p, size_t n) {
    GT_REQUIRE(n >= 6, "png: truncated zlib stream");
    GT_REQUIRE((p[0] & 0x0f) == 8, "png: unsupported zlib method");
    size_t off = 2;
    std::vector<uint8_t> raw;
    bool final = false;
    while (!final) {
        GT_REQUIRE(off + 5 <= n, "png: truncated deflate block");
        uint8_t hdr = p[off];
        GT_REQUIRE((hdr & 0x06) == 0, "png: reader supports stored deflate blocks only");
        final = hdr & 1;
        size_t len = size_t(p[off + 1]) | (size_t(p[off + 2]) << 8);
        size_t nlen = size_t(p[off + 3]) | (size_t(p[off + 4]) << 8);
        GT_REQUIRE((len ^ nlen) == 0xffff, "png: corrupt stored block header");
        off += 5;
        GT_REQUIRE(off + len <= n, "png: truncated stored block");
        raw.insert(raw.end(), p + off, p + off + len);
        off += len;
    }
    GT_REQUIRE(off + 4 <= n, "png: missing adler32");
    GT_REQUIRE(read_be32(p + off) == adler32(raw.data(), raw.size()), "png: adler32 mismatch");
    return raw;
}

std::vector<uint8_t> encode_png(int h, int w, int bit_depth, int color_type,
                                const std::vector<uint8_t>& rows) {
    std::vector<uint8_t> out(kSig.begin(), kSig.end());
    std::vector<uint8_t> ihdr;
    push_be32(ihdr, uint32_t(w));
    push_be32(ihdr, uint32_t(h));
    ihdr.push_back(uint8_t(bit_depth));
    ihdr.push_back(uint8_t(color_type));
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", zlib_stored(rows));
    append_chunk(out, "IEND", {});
    return out;
}

struct Decoded {
    int h = 0, w = 0, bit_depth = 0, color_type = 0;
    std::vector<uint8_t> raw;  // filtered scanlines
};

Decoded decode_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    GT_REQUIRE(f.good(), "png: cannot open ", path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    GT_REQUIRE(bytes.size() > 8 && std::memcmp(bytes.data(), kSig.data(), 8) == 0,
               "png: bad signature in ", path);
    Decoded d;
    std::vector<uint8_t> idat;
    size_t off = 8;
    bool done = false;
    while (!done) {
        GT_REQUIRE(off + 8 <= bytes.size(), "png: truncated chunk in ", path);
        uint32_t len = read_be32(bytes.data() + off);
        const char* type = reinterpret_cast<const char*>(bytes.data() + off + 4);
        GT_REQUIRE(off + 12 + len <= bytes.size(), "png: truncated chunk body in ", path);
        const uint8_t* payload = bytes.data() + off + 8;
        uint32_t expect = read_be32(bytes.data() + off + 8 + len);
        GT_REQUIRE(crc32(bytes.data() + off + 4, len + 4) == expect, "png: crc mismatch in ",
                   path);
        if (std::memcmp(type, "IHDR", 4) == 0) {
            GT_REQUIRE(len == 13, "png: bad IHDR");
            d.w = int(read_be32(payload));
            d.h = int(read_be32(payload + 4));
            d.bit_depth = payload[8];
            d.color_type = payload[9];
            GT_REQUIRE(payload[10] == 0 && payload[11] == 0 && payload[12] == 0,
                       "png: unsupported IHDR options in ", path);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            done = true;
        }
        off += 12 + len;
    }
    d.raw = zlib_stored_decode(idat.data(), idat.size());
    return d;
}

std::vector<uint8_t> unfilter(const Decoded& d, size_t bytes_per_pixel) {
    size_t stride = size_t(d.w) * bytes_per_pixel;
    GT_REQUIRE(d.raw.size() == size_t(d.h) * (stride + 1), "png: scanline size mismatch");
    std::vector<uint8_t> out(size_t(d.h) * stride);
    for (int y = 0; y < d.h; ++y) {
        const uint8_t* row = d.raw.data() + size_t(y) * (stride + 1);
        GT_REQUIRE(row[0] == 0, "png: reader supports filter None only");
        std::copy_n(row + 1, stride, out.data() + size_t(y) * stride);
    }
    return out;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    GT_REQUIRE(f.good(), "png: cannot write ", path);
    f.write(reinterpret_cast<const char*>(bytes.data()), long(bytes.size()));
    GT_REQUIRE(f.good(), "png: write failed for ", path);
}

} // namespace

uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed) {
    static const auto table = make_crc_table();
    uint32_t c = seed ^ 0xffffffffu;
    for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

std::vector<uint8_t> encode_png_rgb8(const ImageU8& img) {
    GT_REQUIRE(img.ch == 3, "png: rgb encoder needs 3 channels");
    std::vector<uint8_t> rows;
    rows.reserve(size_t(img.h) * (size_t(img.w) * 3 + 1));
    for (int y = 0; y < img.h; ++y) {
        rows.push_back(0);
        rows.insert(rows.end(), img.px.begin() + size_t(y) * img.w * 3,
                    img.px.begin() + size_t(y + 1) * img.w * 3);
    }
    return encode_png(img.h, img.w, 8, 2, rows);
}

void write_png_rgb8(const std::string& path, const ImageU8& img) {
    write_file(path, encode_png_rgb8(img));
}

void write_png_gray8(const std::string& path, const ImageU8& img) {
    GT_REQUIRE(img.ch == 1, "png: gray encoder needs 1 channel");
    std::vector<uint8_t> rows;
    rows.reserve(size_t(img.h) * (size_t(img.w) + 1));
    for (int y = 0; y < img.h; ++y) {
        rows.push_back(0);
        rows.insert(rows.end(), img.px.begin() + size_t(y) * img.w,
                    img.px.begin() + size_t(y + 1) * img.w);
    }
    write_file(path, encode_png(img.h, img.w, 8, 0, rows));
}

void write_png_gray16(const std::string& path, const Image16& img) {
    std::vector<uint8_t> rows;
    rows.reserve(size_t(img.h) * (size_t(img.w) * 2 + 1));
    for (int y = 0; y < img.h; ++y) {
        rows.push_back(0);
        for (int x = 0; x < img.w; ++x) {
            uint16_t v = img.at(y, x);
            rows.push_back(uint8_t(v >> 8));  // png samples are big endian
            rows.push_back(uint8_t(v & 0xff));
        }
    }
    write_file(path, encode_png(img.h, img.w, 16, 0, rows));
}

ImageU8 read_png_rgb8(const std::string& path) {
    Decoded d = decode_png(path);
    GT_REQUIRE(d.bit_depth == 8 && d.color_type == 2, "png: expected 8-bit RGB in ", path);
    ImageU8 img(d.h, d.w, 3);
    img.px = unfilter(d, 3);
    return img;
}

ImageU8 read_png_gray8(const std::string& path) {
    Decoded d = decode_png(path);
    GT_REQUIRE(d.bit_depth == 8 && d.color_type == 0, "png: expected 8-bit gray in ", path);
    ImageU8 img(d.h, d.w, 1);
    img.px = unfilter(d, 1);
    return img;
}

Image16 read_png_gray16(const std::string& path) {
    Decoded d = decode_png(path);
    GT_REQUIRE(d.bit_depth == 16 && d.color_type == 0, "png: expected 16-bit gray in ", path);
    auto flat = unfilter(d, 2);
    Image16 img(d.h, d.w);
    for (size_t i = 0; i < img.px.size(); ++i)
        img.px[i] = uint16_t((uint16_t(flat[2 * i]) << 8) | flat[2 * i + 1]);
    return img;
}

} // namespace gantruth
