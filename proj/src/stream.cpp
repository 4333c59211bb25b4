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

#include "gridstream/stream.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace gridstream {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

bool identity_less(const SpatialPoint& a, const SpatialPoint& b) {
  return std::tie(a.object_id, a.event_time, a.x, a.y) <
         std::tie(b.object_id, b.event_time, b.x, b.y);
}

std::optional<RecordFormat> parse_format(std::string_view name) {
  if (name == "csv") return RecordFormat::Csv;
  if (name == "geojson") return RecordFormat::GeoJson;
  return std::nullopt;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (auto ms = parse_int<std::int64_t>(text)) {
    if (*ms < 0) return std::nullopt;
    return ms;
  }

  // YYYY-MM-DD HH:MM:SS[.fff]
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
      (text[10] != ' ' && text[10] != 'T') || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  auto year = parse_int<int>(text.substr(0, 4));
  auto month = parse_int<unsigned>(text.substr(5, 2));
  auto day = parse_int<unsigned>(text.substr(8, 2));
  auto hour = parse_int<int>(text.substr(11, 2));
  auto minute = parse_int<int>(text.substr(14, 2));
  auto second = parse_int<int>(text.substr(17, 2));
  if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
  if (*hour > 23 || *minute > 59 || *second > 59) return std::nullopt;

  std::int64_t millis = 0;
  std::string_view rest = text.substr(19);
  if (!rest.empty()) {
    if (rest.front() != '.' || rest.size() < 2 || rest.size() > 4) return std::nullopt;
    std::string digits(rest.substr(1));
    digits.resize(3, '0');
    auto ms = parse_int<int>(digits);
    if (!ms) return std::nullopt;
    millis = *ms;
  }

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{*year}, std::chrono::month{*month},
                           std::chrono::day{*day}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t t =
      ((static_cast<std::int64_t>(days) * 24 + *hour) * 60 + *minute) * 60000 +
      std::int64_t{*second} * 1000 + millis;
  if (t < 0) return std::nullopt;
  return t;
}

std::string format_datetime(std::int64_t epoch_ms) {
  using namespace std::chrono;
  std::int64_t days = epoch_ms / 86400000;
  std::int64_t rem = epoch_ms % 86400000;
  if (rem < 0) {
    rem += 86400000;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const int ms = static_cast<int>(rem % 1000);
  const int secs = static_cast<int>(rem / 1000);
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d",
                        static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()),
                        static_cast<unsigned>(ymd.day()), secs / 3600,
                        (secs / 60) % 60, secs % 60);
  if (ms != 0) std::snprintf(buf + n, sizeof buf - n, ".%03d", ms);
  return buf;
}

namespace {

std::optional<SpatialPoint> parse_csv(std::string_view line) {
  std::string_view fields[4];
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (count == 4) return std::nullopt;
    fields[count++] = line.substr(start, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (count != 4) return std::nullopt;

  SpatialPoint p;
  const auto id = trim(fields[0]);
  if (id.empty()) return std::nullopt;
  auto t = parse_timestamp(fields[1]);
  auto x = parse_double(fields[2]);
  auto y = parse_double(fields[3]);
  if (!t || !x || !y) return std::nullopt;
  p.object_id = std::string(id);
  p.event_time = *t;
  p.x = *x;
  p.y = *y;
  return p;
}

std::optional<SpatialPoint> parse_geojson(std::string_view record) {
  using nlohmann::json;
  json doc = json::parse(record.begin(), record.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  if (doc.value("type", "") != "Feature") return std::nullopt;

  auto geom = doc.find("geometry");
  if (geom == doc.end() || !geom->is_object() ||
      geom->value("type", "") != "Point") {
    return std::nullopt;
  }
  auto coords = geom->find("coordinates");
  if (coords == geom->end() || !coords->is_array() || coords->size() < 2 ||
      !(*coords)[0].is_number() || !(*coords)[1].is_number()) {
    return std::nullopt;
  }
  auto props = doc.find("properties");
  if (props == doc.end() || !props->is_object()) return std::nullopt;

  SpatialPoint p;
  p.x = (*coords)[0].get<double>();
  p.y = (*coords)[1].get<double>();
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;

  auto id = props->find("oID");
  if (id == props->end()) return std::nullopt;
  if (id->is_string()) {
    p.object_id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    p.object_id = std::to_string(id->get<std::int64_t>());
  } else {
    return std::nullopt;
  }
  if (p.object_id.empty()) return std::nullopt;

  auto ts = props->find("timestamp");
  if (ts == props->end()) return std::nullopt;
  if (ts->is_number_integer()) {
    p.event_time = ts->get<std::int64_t>();
  } else if (ts->is_string()) {
    auto t = parse_timestamp(ts->get<std::string>());
    if (!t) return std::nullopt;
    p.event_time = *t;
  } else {
    return std::nullopt;
  }
  if (p.event_time < 0) return std::nullopt;
  return p;
}

}  // namespace

std::optional<SpatialPoint> parse_point(std::string_view record,
                                        RecordFormat format) {
  record = trim(record);
  if (record.empty()) return std::nullopt;
  return format == RecordFormat::Csv ? parse_csv(record) : parse_geojson(record);
}

std::string to_csv(const SpatialPoint& p) {
  return p.object_id + "," + format_datetime(p.event_time) + "," +
         shortest(p.x) + "," + shortest(p.y);
}

std::string to_geojson(const SpatialPoint& p) {
  nlohmann::json doc = {
      {"type", "Feature"},
      {"geometry", {{"type", "Point"}, {"coordinates", {p.x, p.y}}}},
      {"properties", {{"oID", p.object_id}, {"timestamp", p.event_time}}}};
  return doc.dump();
}

bool assign_key(const Grid& grid, SpatialPoint& p) {
  auto cell = grid.try_cell_of(p.x, p.y);
  if (!cell) return false;
  p.cell = grid.encode(*cell);
  return true;
}

std::optional<std::vector<double>> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    auto v = parse_double(text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start));
    if (!v) return std::nullopt;
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Line readers

namespace {

class LineReader {
 public:
  virtual ~LineReader() = default;
  /// false at end of input; sets `failed` on an I/O error.
  virtual bool next_line(std::string& line, bool& failed) = 0;
};

class IstreamLineReader : public LineReader {
 public:
  explicit IstreamLineReader(std::istream& in) : in_(in) {}
  bool next_line(std::string& line, bool& failed) override {
    if (std::getline(in_, line)) return true;
    failed = in_.bad();
    return false;
  }

 private:
  std::istream& in_;
};

class TcpLineReader : public LineReader {
 public:
  explicit TcpLineReader(std::uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw SourceError("socket() failed");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 1) != 0) {
      ::close(listen_fd_);
      throw SourceError("cannot listen on 127.0.0.1:" + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~TcpLineReader() override {
    if (conn_fd_ >= 0) ::close(conn_fd_);
    if (listen_fd_ >= 0) ::close(listen_fd_);
  }

  std::uint16_t port() const { return port_; }

  bool next_line(std::string& line, bool& failed) override {
    if (conn_fd_ < 0) {
      conn_fd_ = ::accept(listen_fd_, nullptr, nullptr);
      if (conn_fd_ < 0) {
        failed = true;
        return false;
      }
    }
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line.assign(buffer_, 0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::recv(conn_fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        failed = true;
        return false;
      }
      if (n == 0) {
        if (buffer_.empty()) return false;
        line.swap(buffer_);
        buffer_.clear();
        return true;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int listen_fd_ = -1;
  int conn_fd_ = -1;
  std::uint16_t port_ = 0;
  std::string buffer_;
};

// ---------------------------------------------------------------------------

class LineSource : public PointStream {
 public:
  LineSource(const SourceSpec& spec, const Grid& grid) : spec_(spec), grid_(grid) {
    switch (spec.kind) {
      case SourceKind::FileReplay:
        open_file();
        break;
      case SourceKind::Stdin:
        reader_ = std::make_unique<IstreamLineReader>(std::cin);
        break;
      case SourceKind::TcpLine: {
        auto tcp = std::make_unique<TcpLineReader>(spec.port);
        tcp_ = tcp.get();
        reader_ = std::move(tcp);
        break;
      }
    }
    loops_left_ = spec.kind == SourceKind::FileReplay ? std::max(spec.loop_count, 1) : 1;
  }

  bool next(SpatialPoint& out) override {
    std::string line;
    while (true) {
      bool failed = false;
      if (!reader_->next_line(line, failed)) {
        if (failed) {
          ++counters_.io_errors;
          return false;
        }
        if (--loops_left_ <= 0) return false;
        if (pass_has_times_) time_shift_ += (pass_max_ - pass_min_ + 1);
        open_file();
        continue;
      }
      if (trim(line).empty()) continue;
      ++counters_.records;
      auto p = parse_point(line, spec_.format);
      if (!p) {
        ++counters_.malformed;
        continue;
      }
      if (loop_index_ == 0) {
        if (!pass_has_times_) {
          pass_min_ = pass_max_ = p->event_time;
          pass_has_times_ = true;
        }
        pass_min_ = std::min(pass_min_, p->event_time);
        pass_max_ = std::max(pass_max_, p->event_time);
      }
      p->event_time += time_shift_;
      if (!assign_key(grid_, *p)) {
        ++counters_.dropped;
        continue;
      }
      pace(p->event_time);
      ++counters_.emitted;
      out = std::move(*p);
      return true;
    }
  }

  const SourceCounters& counters() const override { return counters_; }
  std::uint16_t port() const { return tcp_ ? tcp_->port() : 0; }

 private:
  void open_file() {
    if (file_) ++loop_index_;
    file_ = std::make_unique<std::ifstream>(spec_.path);
    if (!*file_) throw SourceError("cannot open input file: " + spec_.path);
    reader_ = std::make_unique<IstreamLineReader>(*file_);
  }

  void pace(std::int64_t event_time) {
    if (spec_.replay_speed <= 0) return;
    const auto now = std::chrono::steady_clock::now();
    if (!pace_started_) {
      pace_started_ = true;
      pace_wall_ = now;
      pace_event_ = event_time;
      return;
    }
    const double offset_ms =
        static_cast<double>(event_time - pace_event_) / spec_.replay_speed;
    const auto target =
        pace_wall_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double, std::milli>(offset_ms));
    if (target > now) std::this_thread::sleep_until(target);
  }

  SourceSpec spec_;
  const Grid& grid_;
  std::unique_ptr<std::ifstream> file_;
  std::unique_ptr<LineReader> reader_;
  TcpLineReader* tcp_ = nullptr;
  SourceCounters counters_;

  int loops_left_ = 1;
  int loop_index_ = 0;
  bool pass_has_times_ = false;
  std::int64_t pass_min_ = 0, pass_max_ = 0;
  std::int64_t time_shift_ = 0;

  bool pace_started_ = false;
  std::chrono::steady_clock::time_point pace_wall_;
  std::int64_t pace_event_ = 0;
};

class MemorySource : public PointStream {
 public:
  MemorySource(std::vector<SpatialPoint> points, const Grid& grid)
      : points_(std::move(points)), grid_(grid) {}

  bool next(SpatialPoint& out) override {
    while (pos_ < points_.size()) {
      SpatialPoint& p = points_[pos_++];
      ++counters_.records;
      if (!assign_key(grid_, p)) {
        ++counters_.dropped;
        continue;
      }
      ++counters_.emitted;
      out = std::move(p);
      return true;
    }
    return false;
  }

  const SourceCounters& counters() const override { return counters_; }

 private:
  std::vector<SpatialPoint> points_;
  const Grid& grid_;
  std::size_t pos_ = 0;
  SourceCounters counters_;
};

}  // namespace

std::unique_ptr<PointStream> open_source(const SourceSpec& spec, const Grid& grid) {
  return std::make_unique<LineSource>(spec, grid);
}

std::uint16_t bound_port(const PointStream& stream) {
  auto* line = dynamic_cast<const LineSource*>(&stream);
  return line ? line->port() : 0;
}

std::unique_ptr<PointStream> memory_source(std::vector<SpatialPoint> points,
                                           const Grid& grid) {
  return std::make_unique<MemorySource>(std::move(points), grid);
}

}  // namespace gridstream
