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

// gridstream command-line front end.
//
//   gridstream range|knn|join  run one continuous query, JSON lines out
//   gridstream bench           grid vs naive over a one-axis sweep, CSV out
//   gridstream synth           write a synthetic T-Drive style trace

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "gridstream/bench.hpp"
#include "gridstream/runtime.hpp"

namespace gs = gridstream;

namespace {

struct Options {
  std::string input;
  std::string query_input;
  std::string format = "csv";
  std::string source = "file";
  std::string query_source = "file";
  std::string bbox = "115.5,39.6,117.6,41.1";
  std::int64_t grid = 150;
  int nbits = 16;
  std::string q;
  double r = 0.004;
  std::size_t k = 10;
  std::int64_t window_size_ms = 10000;
  std::int64_t window_slide_ms = 5000;
  std::int64_t lateness_ms = 0;
  int parallelism = 1;
  int threads = 1;
  std::string out;
  std::string metrics_out;
  std::uint64_t seed = 1;
  double replay_speed = 0;
  int loop_count = 1;
  std::string sweep;
  std::string variant = "grid";
  bool haversine = false;

  // bench / synth
  std::string queries = "range,knn,join";
  std::size_t n = 100000;
  double rate = 1000;
  double query_rate = 10;
  int reps = 3;
  std::string gnuplot_out;
  std::string distribution = "uniform";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output stream: the --out file or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

gs::Grid make_grid(const Options& o) {
  const gs::BBox b = gs::parse_bbox(o.bbox);
  if (o.grid < 1 || o.grid > std::numeric_limits<std::uint32_t>::max()) {
    throw UsageError("--grid must be a positive cell count");
  }
  return gs::Grid::build(b.min_x, b.min_y, b.max_x, b.max_y,
                         static_cast<std::uint32_t>(o.grid), o.nbits);
}

gs::RecordFormat format_of(const Options& o) {
  auto f = gs::parse_format(o.format);
  if (!f) throw UsageError("unknown --format " + o.format);
  return *f;
}

gs::SourceSpec source_spec(const std::string& source, const std::string& path, const Options& o) {
  gs::SourceSpec spec;
  spec.format = format_of(o);
  spec.replay_speed = o.replay_speed;
  spec.loop_count = o.loop_count;
  if (source == "file") {
    if (path.empty()) throw UsageError("file source needs an input path");
    spec.kind = gs::SourceKind::FileReplay;
    spec.path = path;
  } else if (source == "stdin") {
    spec.kind = gs::SourceKind::Stdin;
  } else if (source.rfind("tcp:", 0) == 0) {
    spec.kind = gs::SourceKind::TcpLine;
    const std::string port = source.substr(4);
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(port, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != port.size() || port.empty() || v > 65535) {
      throw UsageError("bad tcp port in --source " + source);
    }
    spec.port = static_cast<std::uint16_t>(v);
  } else {
    throw UsageError("unknown --source " + source + " (file, stdin, tcp:<port>)");
  }
  return spec;
}

gs::Location parse_location(const std::string& text) {
  auto nums = gs::parse_number_list(text);
  if (!nums || nums->size() != 2) throw UsageError("--q must be x,y");
  return {(*nums)[0], (*nums)[1]};
}

gs::Variant parse_variant(const std::string& v) {
  if (v == "grid") return gs::Variant::Grid;
  if (v == "naive") return gs::Variant::Naive;
  throw UsageError("unknown --variant " + v);
}

gs::WindowSpec window_of(const Options& o) {
  gs::WindowSpec w{o.window_size_ms, o.window_slide_ms, o.lateness_ms};
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return w;
}

void write_metrics(const Options& o, const gs::RuntimeMetrics& m) {
  std::cerr << m.summary_json() << "\n";
  if (o.metrics_out.empty()) return;
  std::ofstream csv(o.metrics_out);
  if (!csv) throw UsageError("cannot open metrics file " + o.metrics_out);
  csv << m.to_csv();
  std::string summary_path = o.metrics_out;
  if (summary_path.size() > 4 && summary_path.ends_with(".csv")) {
    summary_path.replace(summary_path.size() - 4, 4, ".json");
  } else {
    summary_path += ".json";
  }
  std::ofstream json(summary_path);
  if (!json) throw UsageError("cannot open metrics file " + summary_path);
  json << m.summary_json() << "\n";
}

int run_query(gs::QueryKind kind, const Options& o) {
  if (!(o.r > 0)) throw UsageError("--r must be > 0");
  const gs::Grid grid = make_grid(o);

  gs::QuerySpec query;
  query.kind = kind;
  query.variant = parse_variant(o.variant);
  query.r = o.r;
  query.k = o.k;
  query.window = window_of(o);
  query.metric = o.haversine ? gs::Metric::Haversine : gs::Metric::Euclidean;
  if (kind != gs::QueryKind::Join) {
    if (o.q.empty()) throw UsageError("--q is required for range and knn");
    query.q = parse_location(o.q);
  }

  std::vector<std::unique_ptr<gs::PointStream>> sources;
  sources.push_back(gs::open_source(source_spec(o.source, o.input, o), grid));
  if (kind == gs::QueryKind::Join) {
    if (o.query_source == "file" && o.query_input.empty()) {
      throw UsageError("join needs --query-input (the query stream S2)");
    }
    sources.push_back(gs::open_source(source_spec(o.query_source, o.query_input, o), grid));
  }
  for (const auto& s : sources) {
    if (auto port = gs::bound_port(*s)) std::cerr << "listening on 127.0.0.1:" << port << "\n";
  }
  gs::PipelineConfig config;
  config.parallelism = o.parallelism;
  config.kernel_threads = o.threads;

  Output out(o.out);
  const auto metrics = gs::run_pipeline(grid, std::move(sources), query, config,
                                        [&](gs::QueryResultBatch&& b) {
                                          out.get() << gs::to_json_line(b) << '\n';
                                        });
  out.get().flush();
  write_metrics(o, metrics);

  std::uint64_t io_errors = 0;
  for (const auto& c : metrics.sources) io_errors += c.io_errors;
  if (io_errors > 0) {
    std::cerr << "error: " << io_errors << " stream I/O error(s); results are partial\n";
    return 1;
  }
  return 0;
}

std::vector<gs::SpatialPoint> load_points(const std::string& path, const Options& o,
                                          const gs::Grid& grid) {
  gs::SourceSpec spec = source_spec("file", path, o);
  spec.replay_speed = 0;
  auto stream = gs::open_source(spec, grid);
  std::vector<gs::SpatialPoint> out;
  gs::SpatialPoint p;
  while (stream->next(p)) out.push_back(p);
  return out;
}

int run_bench_cmd(const Options& o) {
  gs::BenchSettings base;
  base.bbox = gs::parse_bbox(o.bbox);
  base.m = o.grid;
  base.n_bits = o.nbits;
  base.r = o.r;
  base.k = o.k;
  base.window = window_of(o);
  if (!o.q.empty()) base.q = parse_location(o.q);
  base.n = o.n;
  base.rate = o.rate;
  base.query_rate = o.query_rate;
  base.seed = o.seed;
  base.parallelism = o.parallelism;
  base.metric = o.haversine ? gs::Metric::Haversine : gs::Metric::Euclidean;
  auto dist = gs::parse_distribution(o.distribution);
  if (!dist) throw UsageError("unknown --distribution " + o.distribution);
  base.distribution = *dist;

  const gs::SweepSpec sweep = gs::parse_sweep(o.sweep.empty() ? "grid:" + std::to_string(o.grid)
                                                               : o.sweep);
  // Validate the whole plan before running anything.
  gs::sweep_plan(sweep, base, o.reps);

  gs::BenchInputs inputs;
  if (!o.input.empty() || !o.query_input.empty()) {
    const gs::Grid grid = make_grid(o);
    if (!o.input.empty()) inputs.s1 = load_points(o.input, o, grid);
    if (!o.query_input.empty()) inputs.s2 = load_points(o.query_input, o, grid);
  }

  std::vector<gs::QueryKind> kinds;
  auto names = o.queries;
  std::size_t pos = 0;
  while (pos <= names.size()) {
    const auto comma = names.find(',', pos);
    const auto name = names.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto kind = gs::parse_query_kind(name);
    if (!kind) throw UsageError("unknown query '" + name + "' in --query");
    kinds.push_back(*kind);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  Output out(o.out);
  out.get() << gs::bench_csv_header() << '\n';
  std::vector<gs::BenchRow> all;
  for (auto kind : kinds) {
    for (const auto& row : gs::run_bench(kind, sweep, base, inputs, o.reps)) {
      out.get() << gs::bench_csv_row(row) << '\n';
      out.get().flush();
      all.push_back(row);
    }
  }
  if (!o.gnuplot_out.empty()) {
    std::ofstream plot(o.gnuplot_out);
    if (!plot) throw UsageError("cannot open " + o.gnuplot_out);
    gs::write_gnuplot(all, plot);
  }
  return 0;
}

int run_synth(const Options& o) {
  gs::SynthSpec spec;
  spec.n = o.n;
  auto dist = gs::parse_distribution(o.distribution);
  if (!dist) throw UsageError("unknown --distribution " + o.distribution);
  spec.distribution = *dist;
  spec.bbox = gs::parse_bbox(o.bbox);
  spec.rate = o.rate;
  spec.seed = o.seed;
  if (spec.n == 0) throw UsageError("--n must be >= 1");
  Output out(o.out);
  gs::synth_stream(spec, out.get());
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--input", o.input, "Input trace (S1 for join)");
  cmd->add_option("--format", o.format, "Record format")->check(CLI::IsMember({"csv", "geojson"}));
  cmd->add_option("--source", o.source, "file, stdin or tcp:<port>");
  cmd->add_option("--bbox", o.bbox, "Grid extent minx,miny,maxx,maxy");
  cmd->add_option("--grid", o.grid, "Cells along x (m)");
  cmd->add_option("--nbits", o.nbits, "Bits per cell index");
  cmd->add_option("--q", o.q, "Query point x,y");
  cmd->add_option("--r", o.r, "Query radius (coordinate units, meters with --haversine)");
  cmd->add_option("--k", o.k, "Neighbors for knn");
  cmd->add_option("--window-size-ms", o.window_size_ms, "Window size");
  cmd->add_option("--window-slide-ms", o.window_slide_ms, "Window slide");
  cmd->add_option("--lateness-ms", o.lateness_ms, "Allowed lateness");
  cmd->add_option("--parallelism", o.parallelism, "Operator instances per stage");
  cmd->add_option("--out", o.out, "Output file (default stdout)");
  cmd->add_option("--metrics-out", o.metrics_out, "Metrics CSV (summary JSON alongside)");
  cmd->add_option("--seed", o.seed, "Seed for synthetic data");
  cmd->add_option("--replay-speed", o.replay_speed, "File replay speed multiplier, 0 = max");
  cmd->add_flag("--haversine", o.haversine, "Great-circle distance, r in meters");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"gridstream: grid-indexed continuous spatial queries over point streams"};
  app.require_subcommand(1);

  std::optional<gs::QueryKind> chosen;
  for (auto kind : {gs::QueryKind::Range, gs::QueryKind::Knn, gs::QueryKind::Join}) {
    auto* cmd = app.add_subcommand(std::string(gs::to_string(kind)),
                                   "Run one continuous " + std::string(gs::to_string(kind)) +
                                       " query");
    add_common(cmd, o);
    cmd->add_option("--query-input", o.query_input, "Query stream S2 (join)");
    cmd->add_option("--query-source", o.query_source, "S2 source: file, stdin or tcp:<port>");
    cmd->add_option("--variant", o.variant, "grid or naive")
        ->check(CLI::IsMember({"grid", "naive"}));
    cmd->add_option("--threads", o.threads, "OpenMP threads per window evaluation");
    cmd->add_option("--loop-count", o.loop_count, "Replay the input file this many times");
    cmd->callback([&chosen, kind] { chosen = kind; });
  }

  auto* bench = app.add_subcommand("bench", "Grid vs naive throughput over a parameter sweep");
  add_common(bench, o);
  bench->add_option("--query-input", o.query_input, "Fixed S2 trace for join");
  bench->add_option("--sweep", o.sweep, "axis:v1,v2,... (grid, r, window, slide, rate, k)");
  bench->add_option("--query", o.queries, "Comma-separated queries to bench");
  bench->add_option("--n", o.n, "Synthetic S1 tuples");
  bench->add_option("--rate", o.rate, "Synthetic S1 tuples per event-time second");
  bench->add_option("--query-rate", o.query_rate, "Synthetic S2 tuples per event-time second");
  bench->add_option("--reps", o.reps, "Repetitions per run");
  bench->add_option("--gnuplot-out", o.gnuplot_out, "Also write a gnuplot data file");
  bench->add_option("--distribution", o.distribution, "uniform or gaussian-clusters");

  auto* synth = app.add_subcommand("synth", "Write a synthetic trajectory CSV");
  synth->add_option("--n", o.n, "Tuples")->required();
  synth->add_option("--distribution", o.distribution, "uniform or gaussian-clusters");
  synth->add_option("--bbox", o.bbox, "Extent minx,miny,maxx,maxy");
  synth->add_option("--rate", o.rate, "Tuples per event-time second");
  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--out", o.out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (chosen) return run_query(*chosen, o);
    if (bench->parsed()) return run_bench_cmd(o);
    if (synth->parsed()) return run_synth(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
