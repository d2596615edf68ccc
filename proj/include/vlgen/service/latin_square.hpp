#pragma once

#include <cstdint>
#include <vector>

namespace vlgen::service {

// n x n square of symbol indices; every symbol once per row and column.
struct LatinSquare {
  std::vector<std::vector<int>> cells;

  int size() const { return int(cells.size()); }
  const std::vector<int>& row(int r) const { return cells.at(r); }
};

// Cyclic square with rows, columns and symbols shuffled by the seed.
LatinSquare make_latin_square(int n = 5, std::uint64_t seed = 0);

bool is_latin_square(const std::vector<std::vector<int>>& cells);

}  // namespace vlgen::service
