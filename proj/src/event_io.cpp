#include "evrec/event_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <string_view>

#include "evrec/error.hpp"

namespace evrec {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

// from_chars rejects a leading '+', text files sometimes carry one.
std::string_view strip_plus(std::string_view s) {
  return (s.size() > 1 && s[0] == '+') ? s.substr(1) : s;
}

bool parse_double(std::string_view s, double& out) {
  s = strip_plus(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  s = strip_plus(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

float get_f32(std::string_view bytes, std::size_t offset) { return std::bit_cast<float>(get_u32(bytes, offset)); }

bool has_magic(std::string_view bytes) {
  return bytes.size() >= 4 && get_f32(bytes, 0) == kFloatContainerMagic;
}

}  // namespace

// ---------------------------------------------------------------------------
// Events

EventPacket EventPacket::from_events(std::vector<Event> events, SensorSize sensor) {
  EventPacket p;
  p.events = std::move(events);
  p.sensor = sensor;
  if (!p.events.empty()) {
    p.t_first = p.events.front().t;
    p.t_last = p.events.back().t;
  }
  return p;
}

EventPacket EventPacket::tail(std::size_t n) const {
  if (n == 0 || n >= events.size()) return *this;
  return from_events(std::vector<Event>(events.end() - static_cast<std::ptrdiff_t>(n), events.end()), sensor);
}

EventPacket parse_events(std::istream& in, SensorSize sensor, TimeUnit unit) {
  std::vector<Event> events;
  std::string line;
  long line_no = 0;
  double last_t = -INFINITY;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) throw Error(ErrorCode::MalformedLine, "expected 't x y p'", line_no);

    Event e;
    if (unit == TimeUnit::Microseconds) {
      std::int64_t us = 0;
      if (!parse_int(tokens[0], us)) throw Error(ErrorCode::MalformedLine, "bad timestamp", line_no);
      e.t = static_cast<double>(us) * 1e-6;
    } else if (!parse_double(tokens[0], e.t)) {
      throw Error(ErrorCode::MalformedLine, "bad timestamp", line_no);
    }
    int p = 0;
    if (e.t < 0.0 || !parse_int(tokens[1], e.x) || !parse_int(tokens[2], e.y) || !parse_int(tokens[3], p) ||
        (p != 0 && p != 1 && p != -1)) {
      throw Error(ErrorCode::MalformedLine, "bad event fields", line_no);
    }
    e.polarity = p == 1 ? 1 : -1;
    if (!sensor.contains(e.x, e.y)) throw Error(ErrorCode::OutOfBounds, "event outside sensor", line_no);
    if (e.t < last_t) throw Error(ErrorCode::NonMonotonicTime, "timestamps decrease", line_no);
    last_t = e.t;
    events.push_back(e);
  }
  return EventPacket::from_events(std::move(events), sensor);
}

void serialize_events(const EventPacket& packet, std::ostream& out) {
  for (const Event& e : packet.events) {
    out << format_double(e.t) << ' ' << e.x << ' ' << e.y << ' ' << e.polarity << '\n';
  }
}

// ---------------------------------------------------------------------------
// Flow

FlowField FlowField::global(Vec2 u) {
  if (!std::isfinite(u.x) || !std::isfinite(u.y)) throw Error(ErrorCode::InvalidArgument, "non-finite flow");
  FlowField f;
  f.global_ = u;
  return f;
}

FlowField FlowField::dense(SensorSize size, std::vector<Vec2> grid) {
  if (grid.size() != size.pixels() || grid.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "dense flow grid does not match its dimensions");
  }
  for (const Vec2& u : grid) {
    if (!std::isfinite(u.x) || !std::isfinite(u.y)) throw Error(ErrorCode::InvalidArgument, "non-finite flow");
  }
  FlowField f;
  f.size_ = size;
  f.grid_ = std::move(grid);
  return f;
}

void FlowField::check_compatible(SensorSize sensor) const {
  if (!is_global() && size_ != sensor) {
    throw Error(ErrorCode::DimensionMismatch, "flow grid " + std::to_string(size_.width) + "x" +
                                                  std::to_string(size_.height) + " does not match sensor " +
                                                  std::to_string(sensor.width) + "x" + std::to_string(sensor.height));
  }
}

FlowField FlowField::to_dense(SensorSize sensor) const {
  check_compatible(sensor);
  if (!is_global()) return *this;
  return dense(sensor, std::vector<Vec2>(sensor.pixels(), global_));
}

FlowField parse_flow(std::istream& in, SensorSize sensor) {
  const std::string bytes = read_all(in);
  if (!has_magic(bytes)) {
    const auto tokens = split_ws(bytes);
    Vec2 u;
    if (tokens.size() == 2 && parse_double(tokens[0], u.x) && parse_double(tokens[1], u.y)) {
      return FlowField::global(u);
    }
    throw Error(ErrorCode::BadMagic, "neither a global 'ux uy' text file nor a dense flow container");
  }
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedData, "dense flow header truncated");
  const auto w = static_cast<std::int32_t>(get_u32(bytes, 4));
  const auto h = static_cast<std::int32_t>(get_u32(bytes, 8));
  if (w != sensor.width || h != sensor.height) {
    throw Error(ErrorCode::DimensionMismatch, "dense flow is " + std::to_string(w) + "x" + std::to_string(h) +
                                                  ", sensor is " + std::to_string(sensor.width) + "x" +
                                                  std::to_string(sensor.height));
  }
  const std::size_t n = sensor.pixels();
  if (bytes.size() < 12 + 8 * n) throw Error(ErrorCode::TruncatedData, "dense flow payload truncated");
  if (bytes.size() > 12 + 8 * n) throw Error(ErrorCode::DimensionMismatch, "dense flow payload longer than header");
  std::vector<Vec2> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = {get_f32(bytes, 12 + 8 * i), get_f32(bytes, 16 + 8 * i)};
  }
  return FlowField::dense(sensor, std::move(grid));
}

void write_flow(const FlowField& flow, std::ostream& out) {
  if (flow.is_global()) {
    out << format_double(flow.global_velocity().x) << ' ' << format_double(flow.global_velocity().y) << '\n';
    return;
  }
  put_f32(out, kFloatContainerMagic);
  put_u32(out, static_cast<std::uint32_t>(flow.size().width));
  put_u32(out, static_cast<std::uint32_t>(flow.size().height));
  for (const Vec2& u : flow.grid()) {
    put_f32(out, static_cast<float>(u.x));
    put_f32(out, static_cast<float>(u.y));
  }
}

Image read_float_image(std::istream& in) {
  const std::string bytes = read_all(in);
  if (!has_magic(bytes)) throw Error(ErrorCode::BadMagic, "not a float image container");
  if (bytes.size() < 16) throw Error(ErrorCode::TruncatedData, "float image header truncated");
  const auto w = static_cast<std::int32_t>(get_u32(bytes, 4));
  const auto h = static_cast<std::int32_t>(get_u32(bytes, 8));
  const auto channels = static_cast<std::int32_t>(get_u32(bytes, 12));
  if (channels != 1) throw Error(ErrorCode::UnsupportedFormat, "float image must have exactly one channel");
  if (w <= 0 || h <= 0) throw Error(ErrorCode::UnsupportedFormat, "float image has empty dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() != 16 + 4 * n) throw Error(ErrorCode::TruncatedData, "float image payload size mismatch");
  Image img(w, h);
  for (std::size_t i = 0; i < n; ++i) img.data[i] = get_f32(bytes, 16 + 4 * i);
  if (!all_finite(img.data)) throw Error(ErrorCode::InvalidArgument, "non-finite value in float image");
  return img;
}

void write_float_image(const Image& img, std::ostream& out) {
  put_f32(out, kFloatContainerMagic);
  put_u32(out, static_cast<std::uint32_t>(img.width));
  put_u32(out, static_cast<std::uint32_t>(img.height));
  put_u32(out, 1u);
  for (double v : img.data) put_f32(out, static_cast<float>(v));
}

// ---------------------------------------------------------------------------
// PGM / PPM

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  for (int c = in.peek(); c != EOF; c = in.peek()) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  for (int c = in.peek(); c != EOF && !std::isspace(c) && c != '#'; c = in.peek()) {
    tok.push_back(static_cast<char>(in.get()));
  }
  return tok;
}

}  // namespace

Image read_pgm(std::istream& in) {
  const std::string magic = pnm_token(in);
  if (magic != "P5") throw Error(ErrorCode::UnsupportedFormat, "expected binary PGM (P5), got '" + magic + "'");
  int w = 0;
  int h = 0;
  int maxval = 0;
  if (!parse_int(pnm_token(in), w) || !parse_int(pnm_token(in), h) || !parse_int(pnm_token(in), maxval) || w <= 0 ||
      h <= 0) {
    throw Error(ErrorCode::TruncatedData, "incomplete PGM header");
  }
  in.get();  // single whitespace byte before the raster
  if (maxval != 255 && maxval != 65535) throw Error(ErrorCode::UnsupportedFormat, "PGM maxval must be 255 or 65535");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t bytes_per = maxval == 255 ? 1 : 2;
  std::string payload(n * bytes_per, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) throw Error(ErrorCode::TruncatedData, "PGM pixel data truncated");
  Image img(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned code = bytes_per == 1 ? static_cast<unsigned char>(payload[i])
                                         : (static_cast<unsigned char>(payload[2 * i]) << 8) |
                                               static_cast<unsigned char>(payload[2 * i + 1]);
    img.data[i] = static_cast<double>(code) / maxval;
  }
  return img;
}

void write_pgm(const Image& img, std::ostream& out, int bit_depth, double lo, double hi) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::InvalidArgument, "bit depth must be 8 or 16");
  const int maxval = bit_depth == 8 ? 255 : 65535;
  out << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  const Image mapped = map_range(img, lo, hi);
  for (double v : mapped.data) {
    const auto code = static_cast<unsigned>(std::lround(v * maxval));
    if (bit_depth == 8) {
      out.put(static_cast<char>(code));
    } else {
      out.put(static_cast<char>(code >> 8));
      out.put(static_cast<char>(code & 0xff));
    }
  }
}

void write_ppm(const Image& r, const Image& g, const Image& b, std::ostream& out) {
  if (r.size() != g.size() || r.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "color planes differ in size");
  out << "P6\n" << r.width << ' ' << r.height << "\n255\n";
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    for (const Image* plane : {&r, &g, &b}) {
      out.put(static_cast<char>(std::lround(std::clamp(plane->data[i], 0.0, 1.0) * 255.0)));
    }
  }
}

// ---------------------------------------------------------------------------
// Labels

ClusterLabels parse_labels(std::istream& in, std::size_t n_events) {
  std::vector<long> raw;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    long id = 0;
    if (tokens.size() != 1 || !parse_int(tokens[0], id)) throw Error(ErrorCode::MalformedLine, "expected one integer", line_no);
    raw.push_back(id);
  }
  if (raw.size() != n_events) {
    throw Error(ErrorCode::CountMismatch,
                std::to_string(raw.size()) + " labels for " + std::to_string(n_events) + " events");
  }
  std::map<long, int> dense;
  for (long id : raw) dense.emplace(id, 0);
  int next = 0;
  for (auto& [id, idx] : dense) idx = next++;

  ClusterLabels labels;
  labels.n_clusters = next;
  labels.ids.reserve(raw.size());
  for (long id : raw) labels.ids.push_back(dense.at(id));
  return labels;
}

}  // namespace evrec
