#pragma once

// File formats.
//
// Frame CSV
//   # sensor: pixel_count=<n>, pitch_um=<p>, bit_depth=<b>
//   <frame_index>,<timestamp_s>,<v0>,...,<v{n-1}>
// Ray CSV       ray_id,x0_mm,z0_mm,x1_mm,z1_mm,blocked
// Record CSV    frame_index,timestamp_s,value_mm,flag_list   (flags ';'-separated)
// Calibration   pixel_index,height_mm
// Sweep CSV     light_distance_mm,object_distance_mm,edge_width_px,sharpness_rate
//
// Reals are written with 9 significant digits; integers verbatim.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "linescan/error.hpp"
#include "linescan/model.hpp"
#include "linescan/optics.hpp"
#include "linescan/stream.hpp"

namespace linescan::io {

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

inline double parse_real(const std::string& text, std::size_t line_no) {
  const std::string t = trim(text);
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw DataError(at_line(line_no) + "expected a number, got '" + t + "'");
  return v;
}

inline long long parse_int(const std::string& text, std::size_t line_no) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw DataError(at_line(line_no) + "expected an integer, got '" + t + "'");
  return v;
}

inline bool blank(const std::string& line) { return trim(line).empty(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Frames

struct FrameFileHeader {
  int pixel_count = 0;
  double pitch_um = 0.0;
  int bit_depth = 0;
};

inline void write_frame_header(std::ostream& os, const SensorSpec& sensor) {
  os << "# sensor: pixel_count=" << sensor.pixel_count << ", pitch_um=" << format_real(sensor.pixel_pitch)
     << ", bit_depth=" << sensor.bit_depth << '\n';
}

inline void write_frame_row(std::ostream& os, const LineImage& f) {
  os << f.frame_index << ',' << format_real(f.timestamp);
  for (AdcCount v : f.values) os << ',' << v;
  os << '\n';
}

inline void write_frames_csv(std::ostream& os, const SensorSpec& sensor, std::span<const LineImage> frames) {
  write_frame_header(os, sensor);
  for (const auto& f : frames) write_frame_row(os, f);
}

struct FrameFile {
  FrameFileHeader header;
  std::vector<LineImage> frames;
};

inline FrameFileHeader parse_frame_header(const std::string& line) {
  constexpr std::string_view prefix = "# sensor:";
  if (line.rfind(prefix, 0) != 0) throw DataError(detail::at_line(1) + "missing '# sensor:' header");
  FrameFileHeader h;
  bool seen[3] = {false, false, false};
  for (const auto& field : detail::split(std::string_view(line).substr(prefix.size()), ',')) {
    const auto kv = detail::split(detail::trim(field), '=');
    if (kv.size() != 2) throw DataError(detail::at_line(1) + "malformed header field '" + field + "'");
    if (kv[0] == "pixel_count") {
      h.pixel_count = static_cast<int>(detail::parse_int(kv[1], 1));
      seen[0] = true;
    } else if (kv[0] == "pitch_um") {
      h.pitch_um = detail::parse_real(kv[1], 1);
      seen[1] = true;
    } else if (kv[0] == "bit_depth") {
      h.bit_depth = static_cast<int>(detail::parse_int(kv[1], 1));
      seen[2] = true;
    } else {
      throw DataError(detail::at_line(1) + "unknown header field '" + kv[0] + "'");
    }
  }
  if (!(seen[0] && seen[1] && seen[2])) throw DataError(detail::at_line(1) + "incomplete sensor header");
  if (h.pixel_count < 2 || h.bit_depth < 8 || h.bit_depth > 16)
    throw DataError(detail::at_line(1) + "invalid sensor header values");
  return h;
}

inline FrameFile read_frames_csv(std::istream& is) {
  FrameFile out;
  std::string line;
  if (!std::getline(is, line)) throw DataError(detail::at_line(1) + "empty frame file");
  out.header = parse_frame_header(line);
  const double max_value = std::ldexp(1.0, out.header.bit_depth) - 1.0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != static_cast<std::size_t>(out.header.pixel_count) + 2)
      throw DataError(detail::at_line(line_no) + "expected " + std::to_string(out.header.pixel_count + 2) +
                      " fields, got " + std::to_string(cells.size()));
    LineImage f;
    f.frame_index = detail::parse_int(cells[0], line_no);
    f.timestamp = detail::parse_real(cells[1], line_no);
    f.values.reserve(static_cast<std::size_t>(out.header.pixel_count));
    for (std::size_t i = 2; i < cells.size(); ++i) {
      const long long v = detail::parse_int(cells[i], line_no);
      if (v < 0 || v > max_value)
        throw DataError(detail::at_line(line_no) + "ADC value out of range: " + std::to_string(v));
      f.values.push_back(static_cast<AdcCount>(v));
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rays

inline void write_rays_csv(std::ostream& os, std::span<const optics::RaySegment> rays) {
  os << "ray_id,x0_mm,z0_mm,x1_mm,z1_mm,blocked\n";
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const auto& r = rays[i];
    os << i << ',' << format_real(r.start.x) << ',' << format_real(r.start.z) << ','
       << format_real(r.end.x) << ',' << format_real(r.end.z) << ',' << (r.blocked ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Records

inline constexpr std::string_view kRecordHeader = "frame_index,timestamp_s,value_mm,flag_list";

inline void write_records_csv(std::ostream& os, std::span<const stream::MeasurementRecord> records) {
  os << kRecordHeader << '\n';
  for (const auto& r : records)
    os << r.frame_index << ',' << format_real(r.timestamp) << ',' << format_real(r.value_mm()) << ','
       << stream::flag_list(r.flags) << '\n';
}

/// Flat view of a record row as stored on disk.
struct RecordRow {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  double value_mm = 0.0;
  unsigned flags = 0;
};

inline std::vector<RecordRow> read_records_csv(std::istream& is) {
  std::vector<RecordRow> out;
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != kRecordHeader)
    throw DataError(detail::at_line(1) + "expected header '" + std::string(kRecordHeader) + "'");
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 4) throw DataError(detail::at_line(line_no) + "expected 4 fields");
    RecordRow r;
    r.frame_index = detail::parse_int(cells[0], line_no);
    r.timestamp = detail::parse_real(cells[1], line_no);
    r.value_mm = detail::parse_real(cells[2], line_no);
    try {
      r.flags = stream::parse_flag_list(detail::trim(cells[3]));
    } catch (const DataError& e) {
      throw DataError(detail::at_line(line_no) + e.what());
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

inline constexpr std::string_view kCalibrationHeader = "pixel_index,height_mm";

inline void write_calibration_csv(std::ostream& os, const HeightCalibration& cal) {
  os << kCalibrationHeader << '\n';
  for (const auto& s : cal.samples()) os << format_real(s.pixel_index) << ',' << format_real(s.height) << '\n';
}

/// Reads (index, height) pairs; the header line is optional.
inline std::vector<HeightCalibration::Sample> read_calibration_samples(std::istream& is) {
  std::vector<HeightCalibration::Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::blank(line) || line.front() == '#') continue;
    if (line_no == 1 && detail::trim(line) == kCalibrationHeader) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 2) throw DataError(detail::at_line(line_no) + "expected 2 fields");
    out.push_back({detail::parse_real(cells[0], line_no), detail::parse_real(cells[1], line_no)});
  }
  return out;
}

inline HeightCalibration read_calibration_csv(std::istream& is) {
  return HeightCalibration(read_calibration_samples(is));
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  double light_distance = 0.0;
  double object_distance = 0.0;
  double edge_width_px = 0.0;
  double sharpness_rate = 0.0;
};

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "light_distance_mm,object_distance_mm,edge_width_px,sharpness_rate\n";
  for (const auto& r : rows)
    os << format_real(r.light_distance) << ',' << format_real(r.object_distance) << ','
       << format_real(r.edge_width_px) << ',' << format_real(r.sharpness_rate) << '\n';
}

// ---------------------------------------------------------------------------
// Files

/// Writes through a sibling temporary file and renames it into place.
inline void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  std::error_code ec;
  try {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + tmp.string() + "' for writing");
    body(os);
    os.flush();
    if (!os) throw DataError("write to '" + tmp.string() + "' failed");
  } catch (...) {
    std::filesystem::remove(tmp, ec);
    throw;
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw DataError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  return is;
}

}  // namespace linescan::io
