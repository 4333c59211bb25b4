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

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gridstream {

inline constexpr std::int64_t kNoWatermark = std::numeric_limits<std::int64_t>::min();

/// Event-time sliding window parameters, all in milliseconds. Windows are
/// half-open [start, start + size) with start a non-negative multiple of
/// slide.
struct WindowSpec {
  std::int64_t size_ms = 10000;
  std::int64_t slide_ms = 5000;
  std::int64_t lateness_ms = 0;

  /// Throws std::invalid_argument unless size >= slide > 0 and lateness >= 0.
  void validate() const;

  std::int64_t max_concurrent() const {
    return (size_ms + slide_ms - 1) / slide_ms;
  }
};

/// Starts of every window containing t, ascending. Empty for t < 0.
std::vector<std::int64_t> windows_of(std::int64_t t, const WindowSpec& spec);

/// Smallest window start whose window contains t.
std::int64_t first_window_start(std::int64_t t, const WindowSpec& spec);

inline std::int64_t advance_watermark(std::int64_t max_event_time_seen,
                                      std::int64_t lateness_ms) {
  return max_event_time_seen - lateness_ms;
}

/// Bounded-out-of-orderness watermark: max event time seen minus the
/// allowed lateness, never moving backwards.
class WatermarkTracker {
 public:
  explicit WatermarkTracker(std::int64_t lateness_ms = 0) : lateness_(lateness_ms) {}

  /// Records an event time and returns the (possibly unchanged) watermark.
  std::int64_t observe(std::int64_t event_time) {
    if (event_time > max_seen_) {
      max_seen_ = event_time;
      current_ = std::max(current_, advance_watermark(max_seen_, lateness_));
    }
    return current_;
  }

  bool is_late(std::int64_t event_time) const { return event_time < current_; }
  std::int64_t current() const { return current_; }
  std::int64_t max_seen() const { return max_seen_; }

 private:
  std::int64_t lateness_;
  std::int64_t max_seen_ = kNoWatermark;
  std::int64_t current_ = kNoWatermark;
};

template <class T>
struct WindowInstance {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::vector<T> members;
};

/// Per-partition window state. Each tuple is stored once, in a pane of width
/// gcd(size, slide); a firing window concatenates its panes. Windows fire in
/// start order, exactly once, including empty windows between the first
/// window of the stream and the watermark.
template <class T>
class WindowBuffer {
 public:
  explicit WindowBuffer(WindowSpec spec) : spec_(spec) {
    spec_.validate();
    pane_ms_ = std::gcd(spec_.size_ms, spec_.slide_ms);
  }

  /// Buffers a tuple. Returns false (and counts it) if t is behind the
  /// watermark.
  bool add(std::int64_t t, T value) {
    if (t < 0 || t < watermark_) {
      ++late_;
      return false;
    }
    note_origin(t);
    panes_[t / pane_ms_].push_back(std::move(value));
    ++buffered_;
    max_buffered_time_ = std::max(max_buffered_time_, t);
    return true;
  }

  /// Makes sure windows from the first one containing t are fired, even if
  /// this instance never receives a tuple for them.
  void note_origin(std::int64_t t) {
    if (t < 0 || t < watermark_) return;
    const std::int64_t s = first_window_start(t, spec_);
    if (!next_start_ || s < *next_start_) next_start_ = s;
  }

  std::vector<WindowInstance<T>> fire_ready(std::int64_t watermark) {
    watermark_ = std::max(watermark_, watermark);
    std::vector<WindowInstance<T>> out;
    while (next_start_ && *next_start_ + spec_.size_ms <= watermark_) {
      out.push_back(take_next());
    }
    return out;
  }

  /// End of stream: fires every remaining window whose start is at or before
  /// max_event_time. Later adds are late.
  std::vector<WindowInstance<T>> flush(std::int64_t max_event_time) {
    std::vector<WindowInstance<T>> out;
    while (next_start_ && *next_start_ <= max_event_time) {
      out.push_back(take_next());
    }
    watermark_ = std::numeric_limits<std::int64_t>::max();
    panes_.clear();
    buffered_ = 0;
    return out;
  }

  std::uint64_t late_count() const { return late_; }
  std::uint64_t windows_fired() const { return fired_; }
  std::size_t buffered() const { return buffered_; }
  std::int64_t watermark() const { return watermark_; }

  /// Unfired windows that currently hold at least one tuple.
  std::int64_t live_windows() const {
    if (buffered_ == 0 || !next_start_) return 0;
    const std::int64_t last = (max_buffered_time_ / spec_.slide_ms) * spec_.slide_ms;
    return last < *next_start_ ? 0 : (last - *next_start_) / spec_.slide_ms + 1;
  }

  /// Sum of window memberships over unfired windows.
  std::size_t member_slots() const {
    if (!next_start_) return 0;
    std::size_t slots = 0;
    for (const auto& [pane, items] : panes_) {
      const std::int64_t t = pane * pane_ms_;
      for (std::int64_t s : windows_of(t, spec_)) {
        if (s >= *next_start_) slots += items.size();
      }
    }
    return slots;
  }

 private:
  WindowInstance<T> take_next() {
    WindowInstance<T> w;
    w.start = *next_start_;
    w.end = w.start + spec_.size_ms;
    const std::int64_t first = w.start / pane_ms_;
    const std::int64_t last = w.end / pane_ms_;  // exclusive
    const bool evicts = spec_.slide_ms >= spec_.size_ms;
    for (auto it = panes_.lower_bound(first); it != panes_.end() && it->first < last; ++it) {
      if (evicts) {
        std::move(it->second.begin(), it->second.end(), std::back_inserter(w.members));
      } else {
        w.members.insert(w.members.end(), it->second.begin(), it->second.end());
      }
    }
    *next_start_ += spec_.slide_ms;
    // Panes before the next window's start are no longer referenced.
    const std::int64_t keep_from = *next_start_ / pane_ms_;
    for (auto it = panes_.begin(); it != panes_.end() && it->first < keep_from;) {
      buffered_ -= it->second.size();
      it = panes_.erase(it);
    }
    ++fired_;
    return w;
  }

  WindowSpec spec_;
  std::int64_t pane_ms_ = 1;
  std::map<std::int64_t, std::vector<T>> panes_;
  std::optional<std::int64_t> next_start_;
  std::int64_t watermark_ = kNoWatermark;
  std::int64_t max_buffered_time_ = 0;
  std::size_t buffered_ = 0;
  std::uint64_t late_ = 0;
  std::uint64_t fired_ = 0;
};

}  // namespace gridstream
