#pragma once

#include <array>
#include <cstdint>

namespace mn::detail {

/// Corner offsets of the unit cube, Bourke numbering.
inline constexpr std::array<std::array<int, 3>, 8> kCubeCorners = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

/// Corner pairs of the twelve cube edges.
inline constexpr std::array<std::array<int, 2>, 12> kCubeEdges = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

extern const std::array<std::array<std::int8_t, 16>, 256> kTriTable;

}  // namespace mn::detail
