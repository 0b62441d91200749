#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pamlab/errors.hpp"
#include "pamlab/lattice_solver.hpp"

namespace pamlab {

using Json = nlohmann::ordered_json;

// Fixed decimal rendering: 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no infinities; those become null.
inline Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

using CsvCell = std::variant<double, long long, std::string, bool>;

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
    if (!out_) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    write_line(header);
  }

  void row(const std::vector<CsvCell>& cells) {
    if (cells.size() != width_) fail(Errc::InvalidArgument, "row width differs from the header");
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (const auto& c : cells) s.push_back(render(c));
    write_line(s);
  }

  void close() {
    out_.flush();
    if (!out_) fail(Errc::IoError, "write to " + path_.string() + " failed");
    out_.close();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  static std::string render(const CsvCell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) return format_double(v);
          else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
          else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
          else return v;
        },
        c);
  }
  void write_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(Errc::IoError, "write to " + path.string() + " failed");
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(Errc::ParseError, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- binary snapshots
//
// Layout (all little-endian):
//   char[8]   magic "PAMSNAP1"
//   uint32    d
//   uint32    n
//   float64   L
//   uint64    replicates R
//   uint64    snapshot count S
//   float64   times[S]
//   float64   values[R][S][n^d]   row-major sites, last coordinate fastest

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = std::bit_cast<U>(v);
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) fail(Errc::IoError, "truncated snapshot file");
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(b[i]) << (8 * i);
  return std::bit_cast<T>(u);
}

}  // namespace detail

inline void write_snapshots_binary(const std::filesystem::path& path, const SnapshotSet& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write("PAMSNAP1", 8);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.grid.d));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.grid.n));
  detail::put_le<double>(out, s.grid.L);
  detail::put_le<std::uint64_t>(out, s.fields.size());
  detail::put_le<std::uint64_t>(out, s.times.size());
  for (double t : s.times) detail::put_le<double>(out, t);
  for (const auto& rep : s.fields)
    for (const auto& f : rep)
      for (double v : f.values) detail::put_le<double>(out, v);
  if (!out) fail(Errc::IoError, "write to " + path.string() + " failed");
}

inline SnapshotSet read_snapshots_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "PAMSNAP1", 8) != 0) fail(Errc::IoError, "not a snapshot file");
  SnapshotSet s;
  s.grid.d = static_cast<int>(detail::get_le<std::uint32_t>(in));
  s.grid.n = static_cast<int>(detail::get_le<std::uint32_t>(in));
  s.grid.L = detail::get_le<double>(in);
  s.grid.validate();
  const auto R = detail::get_le<std::uint64_t>(in), S = detail::get_le<std::uint64_t>(in);
  s.times.resize(S);
  for (auto& t : s.times) t = detail::get_le<double>(in);
  s.fields.assign(R, std::vector<FieldState>(S));
  for (auto& rep : s.fields)
    for (std::size_t i = 0; i < S; ++i) {
      rep[i].grid = s.grid;
      rep[i].time = s.times[i];
      rep[i].values.resize(s.grid.sites());
      for (auto& v : rep[i].values) v = detail::get_le<double>(in);
    }
  return s;
}

// ---------------------------------------------------------------- manifest

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string subcommand;
  std::string version;
  std::string config_text;  // verbatim echo
  Json resolved;            // config after defaults
  std::uint64_t seed = 0;
  Json derived;             // per-run constants
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  std::string started, finished;

  Json to_json() const {
    Json j;
    j["subcommand"] = subcommand;
    j["version"] = version;
    j["seed"] = seed;
    j["config"] = config_text;
    j["resolved"] = resolved;
    j["derived"] = derived;
    j["outputs"] = outputs;
    j["warnings"] = warnings;
    j["started"] = started;
    j["finished"] = finished;
    return j;
  }
};

}  // namespace pamlab
