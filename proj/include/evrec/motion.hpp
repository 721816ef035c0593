#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "evrec/event_io.hpp"
#include "evrec/image.hpp"

namespace evrec {

inline constexpr double kDefaultMinFlow = 1e-6;  // px/s, zero-flow threshold

struct WarpedEvent {
  Vec2 pos;  // fractional pixels at t_ref
  int polarity = 1;
  bool in_bounds = false;
};

/// Normalized image of warped events: IWE / (|u(x)| dt), border ring and
/// zero-flow pixels forced to 0. This is the right-hand side b.
struct Niwe {
  Image image;
  double t_ref = 0.0;
  double dt = 0.0;
  std::size_t n_events = 0;
  double sigma_px = 0.0;
  double contrast = 0.0;
  double u_min = kDefaultMinFlow;
};

/// x' = x - (t - t_ref) u. Dense flow is sampled at the event's own pixel.
std::vector<WarpedEvent> warp_events(const EventPacket& packet, const FlowField& flow, double t_ref);

/// Bilinear voting of contrast * polarity, then a truncated unit-sum Gaussian
/// blur (zero outside the grid). Out-of-bounds events are ignored.
Image accumulate_iwe(std::span<const WarpedEvent> warped, SensorSize grid, double contrast, double sigma_px);

/// Throws NonPositiveDt when dt <= 0 and the IWE is not identically zero.
Niwe normalize_iwe(const Image& iwe, const FlowField& flow, double dt, double u_min = kDefaultMinFlow);

struct NiweOptions {
  double contrast = 0.1;
  double sigma_px = 1.0;
  double u_min = kDefaultMinFlow;
  std::optional<double> t_ref;  // packet midpoint when unset
};

/// warp -> accumulate -> normalize at the sensor resolution.
Niwe build_niwe(const EventPacket& packet, const FlowField& flow, const NiweOptions& opts = {});

/// Rectangular grid of candidate global velocities; both ranges inclusive.
struct VelocityGrid {
  double ux_min = 0.0;
  double ux_max = 0.0;
  double uy_min = 0.0;
  double uy_max = 0.0;
  double step_x = 1.0;
  double step_y = 1.0;

  static VelocityGrid symmetric(double range, double step) { return {-range, range, -range, range, step, step}; }
  std::vector<Vec2> candidates() const;
};

double iwe_variance(const Image& iwe);

/// Constant-flow contrast maximization: the grid velocity whose IWE (sigma 1,
/// unit contrast, midpoint reference) has maximal variance. Ties go to the
/// smallest |u|, then lexicographically smallest (ux, uy).
FlowField estimate_global_flow_cmax(const EventPacket& packet, const VelocityGrid& grid);

/// Idealized event generation used as a test oracle. Log-brightness is linear
/// between frames; each pixel fires whenever it crosses a multiple of C away
/// from its reference level (initialized from frame 0).
EventPacket simulate_events(std::span<const Image> frames, std::span<const double> timestamps, double contrast);

}  // namespace evrec
