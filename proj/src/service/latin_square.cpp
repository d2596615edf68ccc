#include "vlgen/service/latin_square.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "vlgen/error.hpp"

namespace vlgen::service {

LatinSquare make_latin_square(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("latin square size must be >= 1, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  auto perm = [&] {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
  };
  const auto rows = perm(), cols = perm(), symbols = perm();
  LatinSquare sq;
  sq.cells.assign(n, std::vector<int>(n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) sq.cells[r][c] = symbols[(rows[r] + cols[c]) % n];
  return sq;
}

bool is_latin_square(const std::vector<std::vector<int>>& cells) {
  const std::size_t n = cells.size();
  for (const auto& row : cells)
    if (row.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> in_row(n), in_col(n);
    for (std::size_t j = 0; j < n; ++j) {
      const int a = cells[i][j], b = cells[j][i];
      if (a < 0 || b < 0 || std::size_t(a) >= n || std::size_t(b) >= n || in_row[a] || in_col[b]) return false;
      in_row[a] = in_col[b] = true;
    }
  }
  return true;
}

}  // namespace vlgen::service
