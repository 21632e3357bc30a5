#pragma once

#include <string>

#include "gantruth/image.hpp"

namespace gantruth {

// Composes labeled image rows into one 8-bit RGB sheet: a text margin on the
// left, one dataset per row, one sample per column.
ImageU8 compose_grid(const std::vector<std::pair<std::string, std::vector<ImageU8>>>& rows,
                     int margin_px = 72, int gap_px = 2);

// 5x7 bitmap text, lowercase/digits/punctuation subset
void draw_text(ImageU8& img, int x, int y, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b);

} // namespace gantruth
