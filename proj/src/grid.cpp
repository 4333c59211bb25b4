/*
 * Copyright 2026 The gridstream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gridstream/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridstream {

namespace {

// Relative slack when deciding how many cells cover the y extent, so that an
// extent that is an exact multiple of l does not gain a sliver row from
// rounding in the division.
constexpr double kCoverSlack = 1e-9;

std::uint32_t clamp_index(double scaled, std::uint32_t cells) {
  const double f = std::floor(scaled);
  if (f <= 0) return 0;
  if (f >= static_cast<double>(cells - 1)) return cells - 1;
  return static_cast<std::uint32_t>(f);
}

}  // namespace

Grid Grid::build(double min_x, double min_y, double max_x, double max_y,
                 std::uint32_t m, int n_bits) {
  if (!std::isfinite(min_x) || !std::isfinite(min_y) ||
      !std::isfinite(max_x) || !std::isfinite(max_y)) {
    throw GridError("grid extent must be finite");
  }
  if (!(max_x > min_x) || !(max_y > min_y)) {
    throw GridError("grid extent must be positive on both axes");
  }
  if (m == 0) throw GridError("grid size m must be at least 1");
  if (n_bits < 1 || n_bits > 32) {
    throw GridError("n_bits must be in [1, 32]");
  }

  Grid g;
  g.min_x_ = min_x;
  g.min_y_ = min_y;
  g.max_x_ = max_x;
  g.max_y_ = max_y;
  g.x_cells_ = m;
  g.cell_len_ = (max_x - min_x) / m;
  const double rows = (max_y - min_y) / g.cell_len_;
  const double covered = std::ceil(rows - rows * kCoverSlack);
  if (covered > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    throw GridError("grid has too many rows");
  }
  g.y_cells_ = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(covered));
  g.n_bits_ = n_bits;

  const std::uint64_t capacity = std::uint64_t{1} << n_bits;
  if (capacity < std::max(g.x_cells_, g.y_cells_)) {
    throw GridError("n_bits=" + std::to_string(n_bits) + " cannot index " +
                    std::to_string(std::max(g.x_cells_, g.y_cells_)) +
                    " cells per axis");
  }
  return g;
}

bool Grid::contains(double x, double y) const {
  return x >= min_x_ && x <= max_x_ && y >= min_y_ && y <= max_y_;
}

std::optional<CellCoord> Grid::try_cell_of(double x, double y) const {
  if (!contains(x, y)) return std::nullopt;
  return CellCoord{clamp_index((x - min_x_) / cell_len_, x_cells_),
                   clamp_index((y - min_y_) / cell_len_, y_cells_)};
}

CellCoord Grid::cell_of(double x, double y) const {
  auto c = try_cell_of(x, y);
  if (!c) {
    throw OutsideGridError("point (" + std::to_string(x) + ", " +
                           std::to_string(y) + ") is outside the grid");
  }
  return *c;
}

CellKey Grid::encode(CellCoord c) const {
  if (!in_range(c)) throw GridError("cell coordinate out of range");
  return CellKey{(std::uint64_t{c.x} << n_bits_) | c.y};
}

CellCoord Grid::decode(CellKey key) const {
  const std::uint64_t mask = (std::uint64_t{1} << n_bits_) - 1;
  if (n_bits_ < 32 && (key.bits >> (2 * n_bits_)) != 0) {
    throw GridError("key wider than 2*n_bits");
  }
  const CellCoord c{static_cast<std::uint32_t>(key.bits >> n_bits_),
                    static_cast<std::uint32_t>(key.bits & mask)};
  if (!in_range(c)) throw GridError("key decodes outside the grid");
  return c;
}

std::string Grid::key_string(CellKey key) const {
  const int width = 2 * n_bits_;
  std::string out(static_cast<std::size_t>(width), '0');
  for (int i = 0; i < width; ++i) {
    if ((key.bits >> (width - 1 - i)) & 1u) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

CellKey Grid::parse_key(std::string_view bits) const {
  if (bits.size() != static_cast<std::size_t>(2 * n_bits_)) {
    throw GridError("key string must have 2*n_bits characters");
  }
  std::uint64_t v = 0;
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw GridError("key string must be binary");
    v = (v << 1) | static_cast<std::uint64_t>(ch - '0');
  }
  CellKey key{v};
  decode(key);
  return key;
}

std::vector<CellCoord> Grid::neighbor_ring(CellCoord c, std::uint32_t n) const {
  if (n == 0) throw GridError("ring index must be >= 1");
  std::vector<CellCoord> out;
  const std::int64_t cx = c.x, cy = c.y, r = n;
  auto push = [&](std::int64_t u, std::int64_t v) {
    if (u >= 0 && v >= 0 && u < x_cells_ && v < y_cells_) {
      out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v)});
    }
  };
  for (std::int64_t u = cx - r; u <= cx + r; ++u) {
    push(u, cy - r);
    push(u, cy + r);
  }
  for (std::int64_t v = cy - r + 1; v <= cy + r - 1; ++v) {
    push(cx - r, v);
    push(cx + r, v);
  }
  return out;
}

Location Grid::cell_origin(CellCoord c) const {
  return {min_x_ + c.x * cell_len_, min_y_ + c.y * cell_len_};
}

LayerParams layer_params(double r, double l) {
  if (!(r > 0) || !std::isfinite(r)) throw GridError("radius must be > 0");
  if (!(l > 0) || !std::isfinite(l)) throw GridError("cell length must be > 0");
  LayerParams p;
  p.guaranteed =
      static_cast<std::int64_t>(std::floor(r / (l * std::sqrt(2.0)))) - 1;
  p.candidate = static_cast<std::int64_t>(std::ceil(r / l));
  return p;
}

LayerSets layer_sets(const Grid& grid, CellCoord query_cell, LayerParams p) {
  if (!grid.in_range(query_cell)) throw GridError("query cell out of range");
  if (p.candidate < 1) throw GridError("candidate ring must be >= 1");
  LayerSets s;
  s.query_cell = query_cell;
  s.g = p.guaranteed;
  s.c = std::max(p.candidate, p.guaranteed);

  // Rings beyond the grid span contribute nothing.
  const std::int64_t span = std::max(grid.x_cells(), grid.y_cells());
  const std::int64_t g_eff = std::min<std::int64_t>(std::max<std::int64_t>(s.g, 0), span);
  const std::int64_t c_eff = std::min<std::int64_t>(s.c, span);

  for (std::int64_t n = 1; n <= g_eff; ++n) {
    auto ring = grid.neighbor_ring(query_cell, static_cast<std::uint32_t>(n));
    s.guaranteed.insert(s.guaranteed.end(), ring.begin(), ring.end());
  }
  s.candidate.push_back(query_cell);
  for (std::int64_t n = g_eff + 1; n <= c_eff; ++n) {
    auto ring = grid.neighbor_ring(query_cell, static_cast<std::uint32_t>(n));
    s.candidate.insert(s.candidate.end(), ring.begin(), ring.end());
  }
  std::sort(s.guaranteed.begin(), s.guaranteed.end());
  std::sort(s.candidate.begin(), s.candidate.end());
  return s;
}

LayerSets layer_sets(const Grid& grid, CellCoord query_cell, double r) {
  return layer_sets(grid, query_cell, layer_params(r, grid.cell_len()));
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t stable_key_hash(const Grid& grid, CellKey key) {
  // Same result as fnv1a64(grid.key_string(key)) without the allocation.
  std::uint64_t h = 14695981039346656037ull;
  const int width = 2 * grid.n_bits();
  for (int i = width - 1; i >= 0; --i) {
    h ^= static_cast<unsigned char>('0' + ((key.bits >> i) & 1u));
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace gridstream
