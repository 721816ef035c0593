#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evrec/image.hpp"

namespace evrec {

struct Event {
  double t = 0.0;  // seconds
  int x = 0;
  int y = 0;
  int polarity = 1;  // +1 or -1

  bool operator==(const Event&) const = default;
};

/// Time-ordered events on a sensor. [t_first, t_last] is the packet span.
struct EventPacket {
  std::vector<Event> events;
  SensorSize sensor;
  double t_first = 0.0;
  double t_last = 0.0;

  static EventPacket from_events(std::vector<Event> events, SensorSize sensor);

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  double duration() const { return t_last - t_first; }

  /// The most recent n events (all of them when n == 0 or n >= size()).
  EventPacket tail(std::size_t n) const;
};

/// Optical flow in pixels/second: one global velocity or one per pixel.
class FlowField {
 public:
  FlowField() = default;

  static FlowField global(Vec2 u);
  static FlowField dense(SensorSize size, std::vector<Vec2> grid);

  bool is_global() const { return grid_.empty(); }
  Vec2 global_velocity() const { return global_; }
  SensorSize size() const { return size_; }
  const std::vector<Vec2>& grid() const { return grid_; }

  /// Velocity at integer pixel (x, y).
  Vec2 at(int x, int y) const {
    return is_global() ? global_ : grid_[static_cast<std::size_t>(y) * size_.width + x];
  }

  /// Throws DimensionMismatch if a dense grid does not match `sensor`.
  void check_compatible(SensorSize sensor) const;

  FlowField to_dense(SensorSize sensor) const;

  bool operator==(const FlowField&) const = default;

 private:
  Vec2 global_{};
  SensorSize size_{};
  std::vector<Vec2> grid_;
};

struct ClusterLabels {
  std::vector<int> ids;  // dense 0..n_clusters-1
  int n_clusters = 0;
};

enum class TimeUnit { Seconds, Microseconds };

/// Text events, one "t x y p" per line. Polarity 0 is read as -1.
EventPacket parse_events(std::istream& in, SensorSize sensor, TimeUnit unit = TimeUnit::Seconds);
void serialize_events(const EventPacket& packet, std::ostream& out);

/// Flow file: either two text tokens "ux uy" (global) or the binary dense
/// container (float32 magic 202021.25, int32 width, int32 height, then
/// width*height little-endian float32 (u, v) pairs, row-major).
FlowField parse_flow(std::istream& in, SensorSize sensor);
void write_flow(const FlowField& flow, std::ostream& out);

inline constexpr float kFloatContainerMagic = 202021.25f;

/// Single-channel float image in the dense container layout: magic, int32
/// width, int32 height, int32 channel count (must be 1), then width*height
/// little-endian float32 values row-major.
Image read_float_image(std::istream& in);
void write_float_image(const Image& img, std::ostream& out);

/// Binary P5 PGM with maxval 255 or 65535; values are mapped to [0, 1].
Image read_pgm(std::istream& in);

/// Writes P5 at 8 or 16 bits. [lo, hi] is mapped linearly onto the full code
/// range before rounding; values outside are clamped.
void write_pgm(const Image& img, std::ostream& out, int bit_depth = 8, double lo = 0.0, double hi = 1.0);

/// Binary P6 from three [0, 1] planes.
void write_ppm(const Image& r, const Image& g, const Image& b, std::ostream& out);

/// One integer cluster id per line; ids are re-indexed densely in ascending order.
ClusterLabels parse_labels(std::istream& in, std::size_t n_events);

}  // namespace evrec
