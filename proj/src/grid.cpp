#include "gantruth/grid.hpp"

#include <cctype>

namespace gantruth {

namespace {

// 5x7 glyphs, one bit per pixel, row-major from the top
struct Glyph {
    char c;
    uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'a', {0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f, 0x00}},
    {'b', {0x10, 0x10, 0x1e, 0x11, 0x11, 0x1e, 0x00}},
    {'c', {0x00, 0x0e, 0x10, 0x10, 0x10, 0x0e, 0x00}},
    {'d', {0x01, 0x01, 0x0f, 0x11, 0x11, 0x0f, 0x00}},
    {'e', {0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e, 0x00}},
    {'f', {0x06, 0x08, 0x1c, 0x08, 0x08, 0x08, 0x00}},
    {'g', {0x00, 0x0f, 0x11, 0x0f, 0x01, 0x0e, 0x00}},
    {'h', {0x10, 0x10, 0x1e, 0x11, 0x11, 0x11, 0x00}},
    {'i', {0x04, 0x00, 0x0c, 0x04, 0x04, 0x0e, 0x00}},
    {'j', {0x02, 0x00, 0x06, 0x02, 0x12, 0x0c, 0x00}},
    {'k', {0x10, 0x12, 0x14, 0x18, 0x14, 0x12, 0x00}},
    {'l', {0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e, 0x00}},
    {'m', {0x00, 0x1a, 0x15, 0x15, 0x15, 0x15, 0x00}},
    {'n', {0x00, 0x1e, 0x11, 0x11, 0x11, 0x11, 0x00}},
    {'o', {0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e, 0x00}},
    {'p', {0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10, 0x00}},
    {'q', {0x00, 0x0f, 0x11, 0x0f, 0x01, 0x01, 0x00}},
    {'r', {0x00, 0x16, 0x18, 0x10, 0x10, 0x10, 0x00}},
    {'s', {0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e, 0x00}},
    {'t', {0x08, 0x1c, 0x08, 0x08, 0x08, 0x06, 0x00}},
    {'u', {0x00, 0x11, 0x11, 0x11, 0x11, 0x0f, 0x00}},
    {'v', {0x00, 0x11, 0x11, 0x11, 0x0a, 0x04, 0x00}},
    {'w', {0x00, 0x15, 0x15, 0x15, 0x15, 0x0a, 0x00}},
    {'x', {0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x00}},
    {'y', {0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e, 0x00}},
    {'z', {0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f, 0x00}},
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x0e, 0x00}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x0e, 0x00}},
    {'2', {0x0e, 0x11, 0x02, 0x04, 0x08, 0x1f, 0x00}},
    {'3', {0x1e, 0x01, 0x06, 0x01, 0x11, 0x0e, 0x00}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x00}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x11, 0x0e, 0x00}},
    {'6', {0x06, 0x08, 0x1e, 0x11, 0x11, 0x0e, 0x00}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x00}},
    {'8', {0x0e, 0x11, 0x0e, 0x11, 0x11, 0x0e, 0x00}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x02, 0x0c, 0x00}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x1f, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {'/', {0x01, 0x02, 0x04, 0x08, 0x10, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x04, 0x00}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char c) {
    c = char(std::tolower(c));
    for (const auto& g : kFont)
        if (g.c == c) return &g;
    return nullptr;
}

} // namespace

void draw_text(ImageU8& img, int x, int y, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b) {
    int cx = x;
    for (char c : text) {
        const Glyph* glyph = find_glyph(c);
        if (!glyph) glyph = find_glyph('.');
        for (int gy = 0; gy < 7; ++gy)
            for (int gx = 0; gx < 5; ++gx)
                if (glyph->rows[gy] & (1 << (4 - gx))) {
                    int px = cx + gx, py = y + gy;
                    if (px >= 0 && px < img.w && py >= 0 && py < img.h) {
                        img.at(py, px, 0) = r;
                        img.at(py, px, 1) = g;
                        img.at(py, px, 2) = b;
                    }
                }
        cx += 6;
    }
}

ImageU8 compose_grid(const std::vector<std::pair<std::string, std::vector<ImageU8>>>& rows,
                     int margin_px, int gap_px) {
    GT_REQUIRE(!rows.empty() && !rows[0].second.empty(), "grid: nothing to compose");
    int cell_h = rows[0].second[0].h, cell_w = rows[0].second[0].w;
    size_t cols = rows[0].second.size();
    for (const auto& [label, images] : rows) {
        GT_REQUIRE(images.size() == cols, "grid: row '", label, "' has ", images.size(),
                   " samples, expected ", cols);
        for (const auto& img : images)
            GT_REQUIRE(img.h == cell_h && img.w == cell_w && img.ch == 3,
                       "grid: mixed image sizes in row '", label, "'");
    }
    int h = int(rows.size()) * (cell_h + gap_px) + gap_px;
    int w = margin_px + int(cols) * (cell_w + gap_px) + gap_px;
    ImageU8 sheet(h, w, 3);
    for (auto& v : sheet.px) v = 24;
    for (size_t r = 0; r < rows.size(); ++r) {
        int y0 = gap_px + int(r) * (cell_h + gap_px);
        draw_text(sheet, 4, y0 + cell_h / 2 - 3, rows[r].first.substr(0, size_t((margin_px - 6) / 6)),
                  235, 235, 235);
        for (size_t c = 0; c < cols; ++c) {
            const ImageU8& img = rows[r].second[c];
            int x0 = margin_px + gap_px + int(c) * (cell_w + gap_px);
            for (int y = 0; y < cell_h; ++y)
                for (int x = 0; x < cell_w; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        sheet.at(y0 + y, x0 + x, ch) = img.at(y, x, ch);
        }
    }
    return sheet;
}

} // namespace gantruth
