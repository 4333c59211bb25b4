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

#include "gridstream/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <variant>

#include <json.hpp>

namespace gridstream {

namespace {

constexpr std::int64_t kNoOrigin = std::numeric_limits<std::int64_t>::max();
constexpr std::int64_t kClosedWatermark = std::numeric_limits<std::int64_t>::max();

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Messages

struct Watermark {
  std::int64_t time = kNoWatermark;
  std::int64_t origin = kNoOrigin;  // earliest accepted event time upstream
};

struct EndOfStream {
  std::int64_t max_event_time = kNoWatermark;
  std::int64_t origin = kNoOrigin;
};

template <class T>
struct Message {
  int sender = 0;
  std::variant<std::vector<T>, Watermark, EndOfStream> body;
};

template <class T>
using Channel = BoundedQueue<Message<T>>;

template <class T>
using Channels = std::vector<std::unique_ptr<Channel<T>>>;

template <class T>
Channels<T> make_channels(int n, std::size_t capacity) {
  Channels<T> out;
  for (int i = 0; i < n; ++i) out.push_back(std::make_unique<Channel<T>>(capacity));
  return out;
}

struct TaggedPoint {
  SpatialPoint point;
  Layer layer = Layer::Candidate;
};

struct JoinItem {
  bool query_side = false;
  Layer tag = Layer::Candidate;
  CellKey key;
  SpatialPoint point;
};

using Payload = std::variant<RangePayload, KnnPayload, JoinPayload>;

struct Partial {
  std::int64_t start = 0;
  std::int64_t end = 0;
  Payload payload;
};

/// Thrown inside operator threads when a queue was closed by an abort.
struct Aborted {};

// ---------------------------------------------------------------------------

/// Buffers items per destination and ships them as batches.
template <class T>
class Outbox {
 public:
  Outbox(int sender, std::vector<Channel<T>*> dests, std::size_t batch)
      : sender_(sender), dests_(std::move(dests)), batch_(std::max<std::size_t>(batch, 1)),
        buffers_(dests_.size()) {}

  int size() const { return static_cast<int>(dests_.size()); }
  std::uint64_t sent() const { return sent_; }

  void send(int dest, T item) {
    auto& buf = buffers_[static_cast<std::size_t>(dest)];
    buf.push_back(std::move(item));
    ++sent_;
    if (buf.size() >= batch_) flush(dest);
  }

  void flush(int dest) {
    auto& buf = buffers_[static_cast<std::size_t>(dest)];
    if (buf.empty()) return;
    push(dest, Message<T>{sender_, std::move(buf)});
    buf = {};
  }

  void flush_all() {
    for (int d = 0; d < size(); ++d) flush(d);
  }

  template <class Control>
  void broadcast(const Control& c) {
    flush_all();
    for (int d = 0; d < size(); ++d) push(d, Message<T>{sender_, c});
  }

 private:
  void push(int dest, Message<T> msg) {
    if (!dests_[static_cast<std::size_t>(dest)]->push(std::move(msg))) throw Aborted{};
  }

  int sender_;
  std::vector<Channel<T>*> dests_;
  std::size_t batch_;
  std::vector<std::vector<T>> buffers_;
  std::uint64_t sent_ = 0;
};

template <class T>
std::vector<Channel<T>*> raw(const Channels<T>& chans) {
  std::vector<Channel<T>*> out;
  for (const auto& c : chans) out.push_back(c.get());
  return out;
}

/// Combines watermarks of several upstream senders: the effective watermark
/// is the minimum, a finished sender counts as +inf.
class InputTracker {
 public:
  explicit InputTracker(int senders)
      : wm_(static_cast<std::size_t>(senders), kNoWatermark),
        origin_(static_cast<std::size_t>(senders), kNoOrigin),
        done_(static_cast<std::size_t>(senders), false) {}

  void on_watermark(int sender, const Watermark& w) {
    auto s = static_cast<std::size_t>(sender);
    wm_[s] = std::max(wm_[s], w.time);
    origin_[s] = std::min(origin_[s], w.origin);
  }

  void on_eos(int sender, const EndOfStream& e) {
    auto s = static_cast<std::size_t>(sender);
    if (done_[s]) return;
    done_[s] = true;
    ++done_count_;
    wm_[s] = kClosedWatermark;
    origin_[s] = std::min(origin_[s], e.origin);
    max_event_time_ = std::max(max_event_time_, e.max_event_time);
  }

  std::int64_t watermark() const { return *std::min_element(wm_.begin(), wm_.end()); }
  std::int64_t origin() const { return *std::min_element(origin_.begin(), origin_.end()); }
  bool all_done() const { return done_count_ == done_.size(); }
  std::int64_t max_event_time() const { return max_event_time_; }

 private:
  std::vector<std::int64_t> wm_;
  std::vector<std::int64_t> origin_;
  std::vector<bool> done_;
  std::size_t done_count_ = 0;
  std::int64_t max_event_time_ = kNoWatermark;
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// ---------------------------------------------------------------------------
// Run control

class RunControl {
 public:
  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(mu_);
      if (!error_) error_ = e;
    }
    for (auto& close : closers_) close();
  }

  template <class T>
  void watch(const Channels<T>& chans) {
    for (const auto& c : chans) {
      auto* raw_chan = c.get();
      closers_.push_back([raw_chan] { raw_chan->close(); });
    }
  }

  /// Runs body on a new thread; exceptions abort the whole run.
  template <class Body>
  void spawn(Body body) {
    threads_.emplace_back([this, body = std::move(body)]() mutable {
      try {
        body();
      } catch (const Aborted&) {
      } catch (...) {
        fail(std::current_exception());
      }
    });
  }

  void join_and_rethrow() {
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
    threads_.clear();
    if (error_) std::rethrow_exception(error_);
  }

  ~RunControl() {
    if (!threads_.empty()) {
      for (auto& close : closers_) close();
      for (auto& t : threads_) {
        if (t.joinable()) t.join();
      }
    }
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
  std::vector<std::function<void()>> closers_;
  std::vector<std::thread> threads_;
};

struct SourceStats {
  std::uint64_t late = 0;
  std::uint64_t items_sent = 0;
};

/// Shared progress counters read by the collector for throughput.
struct Progress {
  std::atomic<std::uint64_t> ingested{0};
  std::atomic<int> sources_running{0};
};

/// route_keyed with a lazily filled per-cell table. One per sending thread.
class KeyRouter {
 public:
  KeyRouter(const Grid& grid, int parallelism) : grid_(grid), parallelism_(parallelism) {
    if (grid.cell_count() <= kMaxCachedCells) {
      table_.assign(static_cast<std::size_t>(grid.cell_count()), -1);
    }
  }

  int operator()(CellKey key) {
    if (table_.empty()) return route_keyed(grid_, key, parallelism_);
    const CellCoord c = grid_.decode(key);
    auto& dest = table_[static_cast<std::size_t>(c.x) * grid_.y_cells() + c.y];
    if (dest < 0) dest = route_keyed(grid_, key, parallelism_);
    return dest;
  }

 private:
  static constexpr std::uint64_t kMaxCachedCells = 1u << 20;
  const Grid& grid_;
  int parallelism_;
  std::vector<std::int32_t> table_;
};

/// Reads one source, drops tuples behind its watermark, routes the rest,
/// and broadcasts a watermark whenever another window becomes fireable.
template <class Out, class Route>
void drive_source(PointStream& stream, const WindowSpec& window, Outbox<Out>& out,
                  Route route, SourceStats& stats, Progress& progress) {
  WatermarkTracker tracker(window.lateness_ms);
  std::int64_t origin = kNoOrigin;
  std::optional<std::int64_t> last_bucket;
  SpatialPoint p;
  while (stream.next(p)) {
    if (tracker.is_late(p.event_time)) {
      ++stats.late;
      continue;
    }
    const std::int64_t wm = tracker.observe(p.event_time);
    origin = std::min(origin, p.event_time);
    route(std::move(p), out);
    progress.ingested.fetch_add(1, std::memory_order_relaxed);
    const std::int64_t bucket = floor_div(wm - window.size_ms, window.slide_ms);
    if (!last_bucket || bucket != *last_bucket) {
      last_bucket = bucket;
      out.broadcast(Watermark{wm, origin});
    }
  }
  out.broadcast(EndOfStream{tracker.max_seen(), origin});
  stats.items_sent = out.sent();
  progress.sources_running.fetch_sub(1);
}

// ---------------------------------------------------------------------------
// Operators

/// Keyed grid filter: drops tuples in pruned cells and rebalances the rest.
void run_filter(Channel<SpatialPoint>& in, int senders, const Grid& grid,
                const LayerSets& layers, Outbox<TaggedPoint>& out, RoundRobin rr,
                InstanceMetrics& m) {
  InputTracker tracker(senders);
  std::int64_t sent_wm = kNoWatermark;
  std::int64_t sent_origin = kNoOrigin;
  while (auto msg = in.pop()) {
    const int sender = msg->sender;
    if (auto* batch = std::get_if<std::vector<SpatialPoint>>(&msg->body)) {
      m.tuples_in += batch->size();
      FilterOutput f = range_filter(*batch, layers, grid);
      m.pruned += f.pruned;
      for (auto& p : f.guaranteed) out.send(rr.next(), {std::move(p), Layer::Guaranteed});
      for (auto& p : f.candidate) out.send(rr.next(), {std::move(p), Layer::Candidate});
    } else if (auto* w = std::get_if<Watermark>(&msg->body)) {
      tracker.on_watermark(sender, *w);
      const auto wm = tracker.watermark();
      const auto origin = tracker.origin();
      if (wm != kNoWatermark && (wm > sent_wm || origin < sent_origin)) {
        sent_wm = wm;
        sent_origin = origin;
        out.broadcast(Watermark{wm, origin});
      }
    } else {
      tracker.on_eos(sender, std::get<EndOfStream>(msg->body));
      if (tracker.all_done()) {
        out.broadcast(EndOfStream{tracker.max_event_time(), tracker.origin()});
        return;
      }
    }
  }
  throw Aborted{};
}

template <class T>
std::int64_t event_time_of(const T& item) {
  if constexpr (std::is_same_v<T, SpatialPoint>) {
    return item.event_time;
  } else {
    return item.point.event_time;
  }
}

/// Drives a windowed operator state: buffers tuples, fires on watermark
/// advance, and ships one partial per window to the merge stage.
template <class In, class State>
void run_windowed(Channel<In>& in, int senders, State& state, Outbox<Partial>& out,
                  InstanceMetrics& m) {
  InputTracker tracker(senders);
  auto ship = [&](std::vector<Partial> parts) {
    m.windows_fired += parts.size();
    for (auto& part : parts) out.send(0, std::move(part));
    out.flush_all();
  };
  while (auto msg = in.pop()) {
    const int sender = msg->sender;
    if (auto* batch = std::get_if<std::vector<In>>(&msg->body)) {
      m.tuples_in += batch->size();
      for (auto& item : *batch) {
        if (!state.add(std::move(item))) ++m.late;
      }
      m.max_buffered = std::max<std::uint64_t>(m.max_buffered, state.buffered());
      m.max_live_windows =
          std::max<std::uint64_t>(m.max_live_windows, static_cast<std::uint64_t>(state.live_windows()));
    } else if (auto* w = std::get_if<Watermark>(&msg->body)) {
      tracker.on_watermark(sender, *w);
      const auto wm = tracker.watermark();
      if (wm == kNoWatermark) continue;
      if (tracker.origin() != kNoOrigin) state.note_origin(tracker.origin());
      m.max_member_slots = std::max<std::uint64_t>(m.max_member_slots, state.member_slots());
      ship(state.fire(wm));
    } else {
      tracker.on_eos(sender, std::get<EndOfStream>(msg->body));
      if (tracker.all_done()) {
        if (tracker.origin() != kNoOrigin) state.note_origin(tracker.origin());
        m.max_member_slots = std::max<std::uint64_t>(m.max_member_slots, state.member_slots());
        ship(state.flush(tracker.max_event_time()));
        out.broadcast(EndOfStream{tracker.max_event_time(), tracker.origin()});
        return;
      }
    }
  }
  throw Aborted{};
}

/// Range refine: guaranteed tuples pass, candidates are distance-checked.
/// The naive variant sees every tuple as a candidate.
class RangeState {
 public:
  RangeState(const QuerySpec& q, int threads, InstanceMetrics& m)
      : query_(q), threads_(threads), metrics_(m), guaranteed_(q.window), candidate_(q.window) {}

  bool add(TaggedPoint&& tp) {
    const auto t = tp.point.event_time;
    return (tp.layer == Layer::Guaranteed ? guaranteed_ : candidate_).add(t, std::move(tp.point));
  }
  void note_origin(std::int64_t t) {
    guaranteed_.note_origin(t);
    candidate_.note_origin(t);
  }
  std::size_t buffered() const { return guaranteed_.buffered() + candidate_.buffered(); }
  std::int64_t live_windows() const {
    return std::max(guaranteed_.live_windows(), candidate_.live_windows());
  }
  std::size_t member_slots() const {
    return guaranteed_.member_slots() + candidate_.member_slots();
  }

  std::vector<Partial> fire(std::int64_t wm) {
    return evaluate(guaranteed_.fire_ready(wm), candidate_.fire_ready(wm));
  }
  std::vector<Partial> flush(std::int64_t max_t) {
    return evaluate(guaranteed_.flush(max_t), candidate_.flush(max_t));
  }

 private:
  std::vector<Partial> evaluate(std::vector<WindowInstance<SpatialPoint>> g,
                                std::vector<WindowInstance<SpatialPoint>> c) {
    if (g.size() != c.size()) throw std::logic_error("layer buffers fired out of step");
    std::vector<Partial> out;
    DistanceCounter dc;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i].start != c[i].start) throw std::logic_error("layer buffers fired out of step");
      RangePayload result =
          query_.variant == Variant::Naive
              ? range_naive(c[i].members, query_.q, query_.r, dc, query_.metric, threads_)
              : range_refine(g[i].members, c[i].members, query_.q, query_.r, dc,
                             query_.metric, threads_);
      out.push_back({g[i].start, g[i].end, std::move(result)});
    }
    metrics_.distance_computations += dc.count;
    return out;
  }

  const QuerySpec& query_;
  int threads_;
  InstanceMetrics& metrics_;
  WindowBuffer<SpatialPoint> guaranteed_;
  WindowBuffer<SpatialPoint> candidate_;
};

/// kNN refine: every surviving tuple is ranked by distance.
class KnnState {
 public:
  KnnState(const QuerySpec& q, int threads, InstanceMetrics& m)
      : query_(q), threads_(threads), metrics_(m), buffer_(q.window) {}

  bool add(TaggedPoint&& tp) {
    const auto t = tp.point.event_time;
    return buffer_.add(t, std::move(tp.point));
  }
  void note_origin(std::int64_t t) { buffer_.note_origin(t); }
  std::size_t buffered() const { return buffer_.buffered(); }
  std::int64_t live_windows() const { return buffer_.live_windows(); }
  std::size_t member_slots() const { return buffer_.member_slots(); }
  std::vector<Partial> fire(std::int64_t wm) { return evaluate(buffer_.fire_ready(wm)); }
  std::vector<Partial> flush(std::int64_t max_t) { return evaluate(buffer_.flush(max_t)); }

 private:
  std::vector<Partial> evaluate(std::vector<WindowInstance<SpatialPoint>> windows) {
    std::vector<Partial> out;
    DistanceCounter dc;
    for (auto& w : windows) {
      out.push_back({w.start, w.end,
                     knn_local(w.members, query_.q, query_.r, query_.k, dc, query_.metric,
                               threads_)});
    }
    metrics_.distance_computations += dc.count;
    return out;
  }

  const QuerySpec& query_;
  int threads_;
  InstanceMetrics& metrics_;
  WindowBuffer<SpatialPoint> buffer_;
};

/// Join: grid variant joins per cell key; naive variant joins its share of
/// S1 against every S2 tuple.
class JoinState {
 public:
  JoinState(const QuerySpec& q, int threads, InstanceMetrics& m)
      : query_(q), threads_(threads), metrics_(m), buffer_(q.window) {}

  bool add(JoinItem&& item) {
    const auto t = item.point.event_time;
    return buffer_.add(t, std::move(item));
  }
  void note_origin(std::int64_t t) { buffer_.note_origin(t); }
  std::size_t buffered() const { return buffer_.buffered(); }
  std::int64_t live_windows() const { return buffer_.live_windows(); }
  std::size_t member_slots() const { return buffer_.member_slots(); }
  std::vector<Partial> fire(std::int64_t wm) { return evaluate(buffer_.fire_ready(wm)); }
  std::vector<Partial> flush(std::int64_t max_t) { return evaluate(buffer_.flush(max_t)); }

 private:
  struct KeyGroup {
    std::vector<SpatialPoint> s1;
    std::vector<Replica> replicas;
  };

  std::vector<Partial> evaluate(std::vector<WindowInstance<JoinItem>> windows) {
    std::vector<Partial> out;
    DistanceCounter dc;
    for (auto& w : windows) {
      JoinPayload pairs;
      if (query_.variant == Variant::Naive) {
        std::vector<SpatialPoint> s1, s2;
        for (auto& item : w.members) {
          (item.query_side ? s2 : s1).push_back(std::move(item.point));
        }
        pairs = join_naive(s1, s2, query_.r, dc, query_.metric, threads_);
      } else {
        // Only keys holding a replica can produce pairs; S1 tuples elsewhere
        // are skipped without being grouped.
        std::unordered_map<std::uint64_t, KeyGroup> groups;
        for (auto& item : w.members) {
          if (item.query_side) {
            groups[item.key.bits].replicas.push_back(
                {item.key, item.tag, std::move(item.point)});
          }
        }
        for (auto& item : w.members) {
          if (item.query_side) continue;
          auto it = groups.find(item.key.bits);
          if (it != groups.end()) it->second.s1.push_back(std::move(item.point));
        }
        for (auto& [key, g] : groups) {
          if (g.s1.empty()) continue;
          auto part = join_per_key(g.s1, g.replicas, query_.r, dc, query_.metric);
          pairs.insert(pairs.end(), std::make_move_iterator(part.begin()),
                       std::make_move_iterator(part.end()));
        }
      }
      out.push_back({w.start, w.end, std::move(pairs)});
    }
    metrics_.distance_computations += dc.count;
    return out;
  }

  const QuerySpec& query_;
  int threads_;
  InstanceMetrics& metrics_;
  WindowBuffer<JoinItem> buffer_;
};

/// Merge-to-one: completes a window once every upstream instance delivered
/// its partial, then hands the combined batch to the sink.
struct CollectorResult {
  std::uint64_t windows = 0;
  std::vector<double> latency_ms;
  double throughput_tps = 0;
  bool has_steady_state = false;
};

CollectorResult run_collector(Channel<Partial>& in, int senders, const QuerySpec& query,
                              const ResultSink& sink, Progress& progress) {
  struct Pending {
    int count = 0;
    std::vector<Payload> parts;
    Clock::time_point first_arrival;
  };
  std::map<std::int64_t, Pending> pending;
  InputTracker tracker(senders);
  CollectorResult result;

  struct Snapshot {
    Clock::time_point at;
    std::uint64_t ingested;
  };
  std::optional<Snapshot> first_emit, last_live_emit;

  auto emit_ready = [&] {
    while (!pending.empty() && pending.begin()->second.count == senders) {
      auto node = pending.extract(pending.begin());
      Pending& p = node.mapped();
      QueryResultBatch batch;
      batch.window_start = node.key();
      batch.window_end = node.key() + query.window.size_ms;
      switch (query.kind) {
        case QueryKind::Range: {
          RangePayload all;
          for (auto& part : p.parts) {
            auto& v = std::get<RangePayload>(part);
            all.insert(all.end(), std::make_move_iterator(v.begin()),
                       std::make_move_iterator(v.end()));
          }
          batch.payload = std::move(all);
          break;
        }
        case QueryKind::Knn: {
          std::vector<KnnPayload> lists;
          for (auto& part : p.parts) lists.push_back(std::move(std::get<KnnPayload>(part)));
          batch.payload = knn_merge(lists, query.k);
          break;
        }
        case QueryKind::Join: {
          JoinPayload all;
          for (auto& part : p.parts) {
            auto& v = std::get<JoinPayload>(part);
            all.insert(all.end(), std::make_move_iterator(v.begin()),
                       std::make_move_iterator(v.end()));
          }
          batch.payload = std::move(all);
          break;
        }
      }
      canonicalize(batch);
      sink(std::move(batch));
      const auto now = Clock::now();
      result.latency_ms.push_back(
          std::chrono::duration<double, std::milli>(now - p.first_arrival).count());
      ++result.windows;

      const Snapshot snap{now, progress.ingested.load(std::memory_order_relaxed)};
      if (!first_emit) {
        first_emit = snap;
      } else if (progress.sources_running.load() > 0) {
        last_live_emit = snap;
      }
    }
  };

  while (auto msg = in.pop()) {
    const int sender = msg->sender;
    if (auto* batch = std::get_if<std::vector<Partial>>(&msg->body)) {
      for (auto& part : *batch) {
        auto [it, inserted] = pending.try_emplace(part.start);
        if (inserted) it->second.first_arrival = Clock::now();
        it->second.parts.push_back(std::move(part.payload));
        ++it->second.count;
      }
      emit_ready();
    } else if (std::holds_alternative<Watermark>(msg->body)) {
      // Partials carry their own completeness; nothing to do.
    } else {
      tracker.on_eos(sender, std::get<EndOfStream>(msg->body));
      if (tracker.all_done()) {
        emit_ready();
        if (!pending.empty()) {
          throw std::logic_error("window " + std::to_string(pending.begin()->first) +
                                 " received " + std::to_string(pending.begin()->second.count) +
                                 " of " + std::to_string(senders) + " partials");
        }
        if (first_emit && last_live_emit && last_live_emit->ingested > first_emit->ingested) {
          const double secs =
              std::chrono::duration<double>(last_live_emit->at - first_emit->at).count();
          if (secs > 0) {
            result.throughput_tps =
                static_cast<double>(last_live_emit->ingested - first_emit->ingested) / secs;
            result.has_steady_state = true;
          }
        }
        return result;
      }
    }
  }
  throw Aborted{};
}

// ---------------------------------------------------------------------------

void check_stages(const QuerySpec& query, const PipelineConfig& config) {
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (config.filter_parallelism < 0) throw ConfigError("filter parallelism must be >= 0");
  if (config.queue_capacity < 1) throw ConfigError("queue capacity must be >= 1");
  if (config.kernel_threads < 1) throw ConfigError("kernel threads must be >= 1");
  if (!config.stages.empty() && config.stages != default_stages(query.kind, query.variant)) {
    throw ConfigError("stage list does not match the " + std::string(to_string(query.kind)) +
                      " query dataflow");
  }
}

InstanceMetrics& slot(std::vector<InstanceMetrics>& all, std::string stage, int index) {
  all.push_back({});
  all.back().stage = std::move(stage);
  all.back().instance = index;
  return all.back();
}

}  // namespace

// ---------------------------------------------------------------------------

void QuerySpec::validate(const Grid& grid) const {
  if (!(r > 0) || !std::isfinite(r)) throw ConfigError("query radius must be > 0");
  if (kind == QueryKind::Knn && k == 0) throw ConfigError("k must be >= 1");
  if (kind != QueryKind::Join && !grid.contains(q.x, q.y)) {
    throw ConfigError("query point lies outside the grid extent");
  }
  try {
    window.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<Stage> default_stages(QueryKind kind, Variant variant) {
  if (variant == Variant::Grid) {
    if (kind == QueryKind::Join) return {Stage::KeyedByCell, Stage::MergeToOne};
    return {Stage::KeyedByCell, Stage::Rebalance, Stage::MergeToOne};
  }
  if (kind == QueryKind::Join) return {Stage::Rebalance, Stage::Broadcast, Stage::MergeToOne};
  return {Stage::Rebalance, Stage::MergeToOne};
}

int route_keyed(const Grid& grid, CellKey key, int parallelism) {
  return static_cast<int>(stable_key_hash(grid, key) % static_cast<std::uint64_t>(parallelism));
}

RuntimeMetrics run_pipeline(const Grid& grid, std::vector<std::unique_ptr<PointStream>> sources,
                            const QuerySpec& query, const PipelineConfig& config,
                            const ResultSink& sink) {
  query.validate(grid);
  check_stages(query, config);
  const std::size_t expected_sources = query.kind == QueryKind::Join ? 2 : 1;
  if (sources.size() != expected_sources) {
    throw ConfigError(std::string(to_string(query.kind)) + " query needs " +
                      std::to_string(expected_sources) + " source(s)");
  }
  for (const auto& s : sources) {
    if (!s) throw ConfigError("null source");
  }

  const int P = config.parallelism;
  const int F = config.filter_parallelism > 0 ? config.filter_parallelism : P;
  const std::size_t cap = config.queue_capacity;
  const std::size_t batch = config.batch_size;
  const int threads = config.kernel_threads;
  const bool grid_variant = query.variant == Variant::Grid;
  const LayerParams params = layer_params_for(grid, query.r, query.metric);

  // Reserved so the references handed to threads stay valid.
  std::vector<InstanceMetrics> inst;
  inst.reserve(static_cast<std::size_t>(F + P));
  std::vector<SourceStats> src_stats(sources.size());
  Progress progress;
  progress.sources_running = static_cast<int>(sources.size());

  // Channels outlive every thread: RunControl is declared after them and
  // joins in its destructor.
  auto merge_in = make_channels<Partial>(1, cap);
  Channels<JoinItem> join_in;
  Channels<SpatialPoint> filter_in;
  Channels<TaggedPoint> refine_in;
  RunControl ctl;
  ctl.watch(merge_in);

  const auto started = Clock::now();

  if (query.kind == QueryKind::Join) {
    join_in = make_channels<JoinItem>(P, cap);
    ctl.watch(join_in);

    // S1: keyed by cell (grid) or round-robin (naive).
    ctl.spawn([&, src = sources[0].get()] {
      Outbox<JoinItem> out(0, raw(join_in), batch);
      RoundRobin rr(P);
      KeyRouter route(grid, P);
      drive_source(
          *src, query.window, out,
          [&](SpatialPoint&& p, Outbox<JoinItem>& o) {
            const int dest = grid_variant ? route(p.cell) : rr.next();
            const CellKey key = p.cell;
            o.send(dest, JoinItem{false, Layer::Candidate, key, std::move(p)});
          },
          src_stats[0], progress);
    });
    // S2: replicated onto its layer cells (grid) or broadcast (naive).
    ctl.spawn([&, src = sources[1].get()] {
      Outbox<JoinItem> out(1, raw(join_in), batch);
      KeyRouter route(grid, P);
      drive_source(
          *src, query.window, out,
          [&](SpatialPoint&& q, Outbox<JoinItem>& o) {
            if (grid_variant) {
              for (auto& rep : join_replicate(q, grid, params)) {
                o.send(route(rep.key),
                       JoinItem{true, rep.tag, rep.key, std::move(rep.query)});
              }
            } else {
              for (int d = 0; d < P; ++d) o.send(d, JoinItem{true, Layer::Candidate, q.cell, q});
            }
          },
          src_stats[1], progress);
    });
    for (int i = 0; i < P; ++i) {
      auto& m = slot(inst, "join", i);
      ctl.spawn([&, i] {
        JoinState state(query, threads, m);
        Outbox<Partial> out(i, raw(merge_in), 1);
        run_windowed(*join_in[static_cast<std::size_t>(i)], 2, state, out, m);
      });
    }
  } else {
    refine_in = make_channels<TaggedPoint>(P, cap);
    ctl.watch(refine_in);
    int refine_senders = 1;

    if (grid_variant) {
      filter_in = make_channels<SpatialPoint>(F, cap);
      ctl.watch(filter_in);
      refine_senders = F;
      const LayerSets layers = layer_sets(grid, grid.cell_of(query.q.x, query.q.y), params);

      ctl.spawn([&, src = sources[0].get()] {
        Outbox<SpatialPoint> out(0, raw(filter_in), batch);
        KeyRouter route(grid, F);
        drive_source(
            *src, query.window, out,
            [&](SpatialPoint&& p, Outbox<SpatialPoint>& o) {
              o.send(route(p.cell), std::move(p));
            },
            src_stats[0], progress);
      });
      for (int i = 0; i < F; ++i) {
        auto& m = slot(inst, "filter", i);
        ctl.spawn([&, i, layers] {
          Outbox<TaggedPoint> out(i, raw(refine_in), batch);
          run_filter(*filter_in[static_cast<std::size_t>(i)], 1, grid, layers, out,
                     RoundRobin(P, i), m);
        });
      }
    } else {
      ctl.spawn([&, src = sources[0].get()] {
        Outbox<TaggedPoint> out(0, raw(refine_in), batch);
        RoundRobin rr(P);
        drive_source(
            *src, query.window, out,
            [&](SpatialPoint&& p, Outbox<TaggedPoint>& o) {
              o.send(rr.next(), TaggedPoint{std::move(p), Layer::Candidate});
            },
            src_stats[0], progress);
      });
    }

    for (int i = 0; i < P; ++i) {
      auto& m = slot(inst, "refine", i);
      ctl.spawn([&, i, refine_senders] {
        Outbox<Partial> out(i, raw(merge_in), 1);
        auto& in = *refine_in[static_cast<std::size_t>(i)];
        if (query.kind == QueryKind::Range) {
          RangeState state(query, threads, m);
          run_windowed(in, refine_senders, state, out, m);
        } else {
          KnnState state(query, threads, m);
          run_windowed(in, refine_senders, state, out, m);
        }
      });
    }
  }

  // The merge stage runs on the calling thread so the sink never needs to
  // be thread-safe.
  CollectorResult collected;
  try {
    collected = run_collector(*merge_in[0], P, query, sink, progress);
  } catch (const Aborted&) {
  } catch (...) {
    ctl.fail(std::current_exception());
  }
  ctl.join_and_rethrow();

  const auto finished = Clock::now();

  RuntimeMetrics metrics;
  metrics.elapsed_s = std::chrono::duration<double>(finished - started).count();
  metrics.instances = std::move(inst);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    metrics.sources.push_back(sources[i]->counters());
    metrics.late_tuples += src_stats[i].late;
    metrics.tuples_routed += src_stats[i].items_sent;
  }
  metrics.tuples_ingested = progress.ingested.load();
  if (query.kind == QueryKind::Join && grid_variant) {
    metrics.replicas = src_stats[1].items_sent;
  }
  for (const auto& m : metrics.instances) {
    metrics.distance_computations += m.distance_computations;
    metrics.pruned_tuples += m.pruned;
  }
  metrics.windows_fired = collected.windows;
  metrics.window_latency_ms = std::move(collected.latency_ms);
  if (collected.has_steady_state) {
    metrics.throughput_tps = collected.throughput_tps;
  } else if (metrics.elapsed_s > 0) {
    metrics.throughput_tps = static_cast<double>(metrics.tuples_ingested) / metrics.elapsed_s;
  }
  return metrics;
}

std::string RuntimeMetrics::to_csv() const {
  std::ostringstream out;
  out << "stage,instance,counter,value\n";
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    out << "source," << i << ",records," << s.records << "\n";
    out << "source," << i << ",emitted," << s.emitted << "\n";
    out << "source," << i << ",dropped," << s.dropped << "\n";
    out << "source," << i << ",malformed," << s.malformed << "\n";
    out << "source," << i << ",io_errors," << s.io_errors << "\n";
  }
  for (const auto& m : instances) {
    const std::string prefix = m.stage + "," + std::to_string(m.instance) + ",";
    out << prefix << "tuples_in," << m.tuples_in << "\n";
    out << prefix << "distance_computations," << m.distance_computations << "\n";
    out << prefix << "pruned," << m.pruned << "\n";
    out << prefix << "late," << m.late << "\n";
    out << prefix << "windows_fired," << m.windows_fired << "\n";
    out << prefix << "max_buffered," << m.max_buffered << "\n";
  }
  return out.str();
}

std::string RuntimeMetrics::summary_json() const {
  double mean_latency = 0;
  if (!window_latency_ms.empty()) {
    for (double v : window_latency_ms) mean_latency += v;
    mean_latency /= static_cast<double>(window_latency_ms.size());
  }
  nlohmann::ordered_json doc = {{"throughput_tps", throughput_tps},
                                {"distance_computations", distance_computations},
                                {"pruned_tuples", pruned_tuples},
                                {"windows_fired", windows_fired},
                                {"tuples_ingested", tuples_ingested},
                                {"late_tuples", late_tuples},
                                {"replicas", replicas},
                                {"elapsed_s", elapsed_s},
                                {"mean_window_latency_ms", mean_latency}};
  return doc.dump();
}

}  // namespace gridstream
