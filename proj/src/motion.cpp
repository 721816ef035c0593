#include "evrec/motion.hpp"

#include <algorithm>
#include <cmath>

#include "evrec/error.hpp"
#include "evrec/kernels.hpp"

namespace evrec {

std::vector<WarpedEvent> warp_events(const EventPacket& packet, const FlowField& flow, double t_ref) {
  flow.check_compatible(packet.sensor);
  const double xmax = packet.sensor.width - 1;
  const double ymax = packet.sensor.height - 1;
  std::vector<WarpedEvent> out;
  out.reserve(packet.size());
  for (const Event& e : packet.events) {
    const Vec2 u = flow.at(e.x, e.y);
    const double dt = e.t - t_ref;
    WarpedEvent w;
    w.pos = {e.x - dt * u.x, e.y - dt * u.y};
    w.polarity = e.polarity;
    w.in_bounds = w.pos.x >= 0.0 && w.pos.y >= 0.0 && w.pos.x <= xmax && w.pos.y <= ymax;
    out.push_back(w);
  }
  return out;
}

Image accumulate_iwe(std::span<const WarpedEvent> warped, SensorSize grid, double contrast, double sigma_px) {
  if (!(sigma_px >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_px must be >= 0");
  std::vector<kernels::Vote> votes;
  votes.reserve(warped.size());
  for (const WarpedEvent& w : warped) {
    if (w.in_bounds) votes.push_back({w.pos.x, w.pos.y, contrast * w.polarity});
  }
  Image iwe(grid);
  kernels::omp::vote_bilinear(votes, grid, iwe.data);
  if (sigma_px > 0.0) {
    Image blurred(grid);
    const auto k = kernels::gaussian_kernel_1d(sigma_px);
    kernels::omp::convolve_separable(iwe.data, grid, k, kernels::Border::Zero, blurred.data);
    return blurred;
  }
  return iwe;
}

Niwe normalize_iwe(const Image& iwe, const FlowField& flow, double dt, double u_min) {
  flow.check_compatible(iwe.size());
  Niwe out;
  out.image = Image(iwe.size());
  out.dt = dt;
  out.u_min = u_min;
  if (!(dt > 0.0)) {
    const bool zero = std::all_of(iwe.data.begin(), iwe.data.end(), [](double v) { return v == 0.0; });
    if (!zero) throw Error(ErrorCode::NonPositiveDt, "packet duration must be positive for a nonzero IWE");
    return out;
  }
  for (int y = 1; y + 1 < iwe.height; ++y) {
    for (int x = 1; x + 1 < iwe.width; ++x) {
      const double speed = flow.at(x, y).norm();
      if (speed < u_min) continue;
      out.image.at(x, y) = iwe.at(x, y) / (speed * dt);
    }
  }
  return out;
}

Niwe build_niwe(const EventPacket& packet, const FlowField& flow, const NiweOptions& opts) {
  const double t_ref = opts.t_ref.value_or(0.5 * (packet.t_first + packet.t_last));
  const auto warped = warp_events(packet, flow, t_ref);
  const Image iwe = accumulate_iwe(warped, packet.sensor, opts.contrast, opts.sigma_px);
  Niwe niwe = normalize_iwe(iwe, flow, packet.duration(), opts.u_min);
  niwe.t_ref = t_ref;
  niwe.n_events = packet.size();
  niwe.sigma_px = opts.sigma_px;
  niwe.contrast = opts.contrast;
  return niwe;
}

// ---------------------------------------------------------------------------
// Contrast maximization

std::vector<Vec2> VelocityGrid::candidates() const {
  if (!(step_x > 0.0) || !(step_y > 0.0) || ux_max < ux_min || uy_max < uy_min) {
    throw Error(ErrorCode::InvalidArgument, "velocity grid needs positive steps and ordered ranges");
  }
  const auto nx = static_cast<int>(std::floor((ux_max - ux_min) / step_x + 1e-9)) + 1;
  const auto ny = static_cast<int>(std::floor((uy_max - uy_min) / step_y + 1e-9)) + 1;
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) out.push_back({ux_min + i * step_x, uy_min + j * step_y});
  }
  return out;
}

double iwe_variance(const Image& iwe) {
  const double m = mean(iwe.data);
  double acc = 0.0;
  for (double v : iwe.data) acc += (v - m) * (v - m);
  return iwe.data.empty() ? 0.0 : acc / static_cast<double>(iwe.data.size());
}

FlowField estimate_global_flow_cmax(const EventPacket& packet, const VelocityGrid& grid) {
  if (packet.empty()) throw Error(ErrorCode::EmptyPacket, "contrast maximization needs events");
  const double t_ref = 0.5 * (packet.t_first + packet.t_last);

  Vec2 best{};
  double best_var = -1.0;
  bool have = false;
  for (const Vec2& u : grid.candidates()) {
    const auto warped = warp_events(packet, FlowField::global(u), t_ref);
    const double var = iwe_variance(accumulate_iwe(warped, packet.sensor, 1.0, 1.0));
    bool take = !have || var > best_var;
    if (have && var == best_var) {
      const double nu = u.norm();
      const double nb = best.norm();
      take = nu < nb || (nu == nb && (u.x < best.x || (u.x == best.x && u.y < best.y)));
    }
    if (take) {
      best = u;
      best_var = var;
      have = true;
    }
  }
  return FlowField::global(best);
}

// ---------------------------------------------------------------------------
// Event simulation

EventPacket simulate_events(std::span<const Image> frames, std::span<const double> timestamps, double contrast) {
  if (frames.size() < 2 || timestamps.size() != frames.size()) {
    throw Error(ErrorCode::BadTimestamps, "need at least two frames with one timestamp each");
  }
  for (std::size_t k = 1; k < timestamps.size(); ++k) {
    if (!(timestamps[k] > timestamps[k - 1])) throw Error(ErrorCode::BadTimestamps, "timestamps must strictly increase");
  }
  if (!(contrast > 0.0)) throw Error(ErrorCode::InvalidArgument, "contrast must be positive");
  const SensorSize sensor = frames.front().size();
  for (const Image& f : frames) {
    if (f.size() != sensor) throw Error(ErrorCode::DimensionMismatch, "frames differ in size");
  }

  const std::size_t n_pix = sensor.pixels();
  const std::vector<double>& ref0 = frames.front().data;
  std::vector<long> level(n_pix, 0);  // reference = ref0 + level * contrast

  std::vector<Event> events;
  std::vector<Event> interval;
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const double t0 = timestamps[k];
    const double span = timestamps[k + 1] - t0;
    interval.clear();
    for (std::size_t i = 0; i < n_pix; ++i) {
      const double a = frames[k].data[i];
      const double b = frames[k + 1].data[i];
      if (a == b) continue;
      const int x = static_cast<int>(i % sensor.width);
      const int y = static_cast<int>(i / sensor.width);
      const int dir = b > a ? 1 : -1;
      for (;;) {
        const double next = ref0[i] + static_cast<double>(level[i] + dir) * contrast;
        if (dir > 0 ? next > b : next < b) break;
        level[i] += dir;
        interval.push_back({t0 + (next - a) / (b - a) * span, x, y, dir});
      }
    }
    std::stable_sort(interval.begin(), interval.end(), [](const Event& l, const Event& r) { return l.t < r.t; });
    events.insert(events.end(), interval.begin(), interval.end());
  }
  return EventPacket::from_events(std::move(events), sensor);
}

}  // namespace evrec
