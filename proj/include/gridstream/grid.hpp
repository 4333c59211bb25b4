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

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridstream {

/// Raised for invalid grid parameters or malformed keys.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a coordinate falls outside the grid extent. Callers on the
/// streaming path catch this (or use Grid::try_cell_of) and drop the tuple.
class OutsideGridError : public GridError {
 public:
  using GridError::GridError;
};

struct Location {
  double x = 0;
  double y = 0;
  friend bool operator==(const Location&, const Location&) = default;
};

struct CellCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

/// Fixed-width concatenation of a cell's x index (high half) and y index
/// (low half). The width of each half is the owning grid's n_bits.
struct CellKey {
  std::uint64_t bits = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline std::uint32_t chebyshev(CellCoord a, CellCoord b) {
  const std::uint32_t dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const std::uint32_t dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

/// Logical uniform grid over a rectangular extent. Cells are squares of side
/// (max_x - min_x) / m; the y axis gets as many cells as needed to cover the
/// extent. Immutable once built.
class Grid {
 public:
  static constexpr int kDefaultBits = 16;

  /// Throws GridError on a non-positive extent, m == 0, or an n_bits too
  /// small to hold every index.
  static Grid build(double min_x, double min_y, double max_x, double max_y,
                    std::uint32_t m, int n_bits = kDefaultBits);

  double min_x() const { return min_x_; }
  double min_y() const { return min_y_; }
  double max_x() const { return max_x_; }
  double max_y() const { return max_y_; }
  std::uint32_t m() const { return x_cells_; }
  double cell_len() const { return cell_len_; }
  int n_bits() const { return n_bits_; }
  std::uint32_t x_cells() const { return x_cells_; }
  std::uint32_t y_cells() const { return y_cells_; }
  std::uint64_t cell_count() const {
    return std::uint64_t{x_cells_} * y_cells_;
  }

  bool contains(double x, double y) const;
  bool in_range(CellCoord c) const {
    return c.x < x_cells_ && c.y < y_cells_;
  }

  /// Points on max_x / max_y clamp into the last cell.
  std::optional<CellCoord> try_cell_of(double x, double y) const;
  /// Throws OutsideGridError when (x, y) is outside the extent.
  CellCoord cell_of(double x, double y) const;

  CellKey encode(CellCoord c) const;
  /// Throws GridError when either half exceeds the index range.
  CellCoord decode(CellKey key) const;

  /// 2*n_bits characters of '0'/'1', x half first.
  std::string key_string(CellKey key) const;
  CellKey parse_key(std::string_view bits) const;

  /// In-range cells at Chebyshev distance exactly n (n >= 1).
  std::vector<CellCoord> neighbor_ring(CellCoord c, std::uint32_t n) const;

  /// Bottom-left corner of a cell.
  Location cell_origin(CellCoord c) const;

 private:
  Grid() = default;

  double min_x_ = 0, min_y_ = 0, max_x_ = 0, max_y_ = 0;
  double cell_len_ = 0;
  std::uint32_t x_cells_ = 0, y_cells_ = 0;
  int n_bits_ = kDefaultBits;
};

/// Ring indices for the guaranteed and candidate layers. `guaranteed` may be
/// zero or negative, meaning no cell is guaranteed.
struct LayerParams {
  std::int64_t guaranteed = 0;
  std::int64_t candidate = 1;
};

/// g = floor(r / (l*sqrt(2))) - 1, c = ceil(r / l). Throws GridError unless
/// r > 0 and l > 0.
LayerParams layer_params(double r, double l);

enum class Layer : std::uint8_t { Guaranteed, Candidate, Pruned };

/// Guaranteed / candidate cell sets around a query cell, clipped to the grid.
/// The query cell itself is always a candidate.
struct LayerSets {
  CellCoord query_cell;
  std::int64_t g = 0;
  std::int64_t c = 1;
  std::vector<CellCoord> guaranteed;  // sorted
  std::vector<CellCoord> candidate;   // sorted

  /// Classifies any in-range cell by its ring distance to the query cell.
  Layer classify(CellCoord cell) const {
    const std::int64_t d = chebyshev(cell, query_cell);
    if (d == 0) return Layer::Candidate;
    if (d <= g) return Layer::Guaranteed;
    if (d <= c) return Layer::Candidate;
    return Layer::Pruned;
  }
};

LayerSets layer_sets(const Grid& grid, CellCoord query_cell, LayerParams p);
LayerSets layer_sets(const Grid& grid, CellCoord query_cell, double r);

/// 64-bit FNV-1a over the key's bit string; the routing hash.
std::uint64_t stable_key_hash(const Grid& grid, CellKey key);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 14695981039346656037ull);

}  // namespace gridstream
