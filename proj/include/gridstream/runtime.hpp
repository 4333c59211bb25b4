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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridstream/grid.hpp"
#include "gridstream/query.hpp"
#include "gridstream/result.hpp"
#include "gridstream/stream.hpp"
#include "gridstream/window.hpp"

namespace gridstream {

/// Raised at pipeline startup for inconsistent query / stage / source setups.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Blocking FIFO with a fixed capacity. close() wakes every waiter: pushes
/// then fail and pops drain nothing further.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  bool push(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (closed_) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }

 private:
  std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

enum class Stage {
  KeyedByCell,  // partition by stable hash of the cell key
  Rebalance,    // round-robin per sender
  Broadcast,    // every instance receives every tuple (naive join's S2)
  MergeToOne,   // single instance combining per-window partials
};

enum class Variant { Grid, Naive };

struct QuerySpec {
  QueryKind kind = QueryKind::Range;
  Variant variant = Variant::Grid;
  Location q;
  double r = 0;
  std::size_t k = 10;
  WindowSpec window;
  Metric metric = Metric::Euclidean;

  /// Throws ConfigError on r <= 0, k == 0, a q outside the grid (range and
  /// kNN), or an invalid window.
  void validate(const Grid& grid) const;
};

/// The stage list each query/variant pair runs:
///   grid range, grid kNN   : KeyedByCell (filter), Rebalance (refine), MergeToOne
///   grid join              : KeyedByCell (replicate + per-key join), MergeToOne
///   naive range, naive kNN : Rebalance, MergeToOne
///   naive join             : Rebalance (S1), Broadcast (S2), MergeToOne
std::vector<Stage> default_stages(QueryKind kind, Variant variant);

struct PipelineConfig {
  int parallelism = 1;
  int filter_parallelism = 0;  // keyed filter stage; 0 means `parallelism`
  std::size_t queue_capacity = 64;  // messages per queue; each message is a batch
  std::size_t batch_size = 256;
  int kernel_threads = 1;  // OpenMP threads per window evaluation
  std::vector<Stage> stages;  // empty: default_stages(query)
};

struct InstanceMetrics {
  std::string stage;
  int instance = 0;
  std::uint64_t tuples_in = 0;
  std::uint64_t distance_computations = 0;
  std::uint64_t pruned = 0;
  std::uint64_t late = 0;
  std::uint64_t windows_fired = 0;
  std::uint64_t max_buffered = 0;
  std::uint64_t max_member_slots = 0;
  std::uint64_t max_live_windows = 0;
};

struct RuntimeMetrics {
  std::vector<InstanceMetrics> instances;
  std::vector<SourceCounters> sources;
  std::uint64_t tuples_ingested = 0;  // accepted by the sources
  std::uint64_t tuples_routed = 0;    // delivered to the first stage
  std::uint64_t late_tuples = 0;      // dropped by the sources' watermark
  std::uint64_t replicas = 0;
  std::uint64_t windows_fired = 0;    // result batches emitted
  std::uint64_t distance_computations = 0;
  std::uint64_t pruned_tuples = 0;
  std::vector<double> window_latency_ms;
  double elapsed_s = 0;
  double throughput_tps = 0;

  /// stage,instance,counter,value rows.
  std::string to_csv() const;
  /// {throughput_tps, distance_computations, pruned_tuples, windows_fired, ...}
  std::string summary_json() const;
};

using ResultSink = std::function<void(QueryResultBatch&&)>;

/// stable_key_hash(key) mod P.
int route_keyed(const Grid& grid, CellKey key, int parallelism);

/// Per-sender round-robin.
class RoundRobin {
 public:
  explicit RoundRobin(int parallelism, int start = 0)
      : parallelism_(parallelism), next_(start % parallelism) {}
  int next() {
    const int out = next_;
    next_ = (next_ + 1) % parallelism_;
    return out;
  }

 private:
  int parallelism_;
  int next_;
};

/// Runs one continuous query to the end of its sources. Range and kNN take
/// one source; join takes two (S1 ordinary, S2 query). Batches reach `sink`
/// in window order on a single thread, canonicalized. A failure in any
/// operator aborts the run and rethrows here.
RuntimeMetrics run_pipeline(const Grid& grid,
                            std::vector<std::unique_ptr<PointStream>> sources,
                            const QuerySpec& query, const PipelineConfig& config,
                            const ResultSink& sink);

}  // namespace gridstream
