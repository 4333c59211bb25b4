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

#include "gridstream/window.hpp"

namespace gridstream {

void WindowSpec::validate() const {
  if (slide_ms <= 0) throw std::invalid_argument("window slide must be > 0");
  if (size_ms < slide_ms) {
    throw std::invalid_argument("window size must be >= window slide");
  }
  if (lateness_ms < 0) throw std::invalid_argument("lateness must be >= 0");
}

std::int64_t first_window_start(std::int64_t t, const WindowSpec& spec) {
  // Smallest k >= 0 with k*slide + size > t.
  const std::int64_t past = t - spec.size_ms;
  if (past < 0) return 0;
  return (past / spec.slide_ms + 1) * spec.slide_ms;
}

std::vector<std::int64_t> windows_of(std::int64_t t, const WindowSpec& spec) {
  std::vector<std::int64_t> out;
  if (t < 0) return out;
  const std::int64_t last = (t / spec.slide_ms) * spec.slide_ms;
  for (std::int64_t s = first_window_start(t, spec); s <= last; s += spec.slide_ms) {
    out.push_back(s);
  }
  return out;
}

}  // namespace gridstream
