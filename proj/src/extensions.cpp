#include "evrec/extensions.hpp"

#include <array>
#include <cmath>
#include <random>

#include "evrec/error.hpp"

namespace evrec {

FlowField upsample_flow(const FlowField& flow, SensorSize sensor, int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidArgument, "scale must be >= 1");
  flow.check_compatible(sensor);
  if (scale == 1) return flow;
  const double s = scale;
  if (flow.is_global()) return FlowField::global({flow.global_velocity().x * s, flow.global_velocity().y * s});

  Image ux(sensor), uy(sensor);
  for (std::size_t i = 0; i < sensor.pixels(); ++i) {
    ux.data[i] = flow.grid()[i].x;
    uy.data[i] = flow.grid()[i].y;
  }
  const SensorSize hr{sensor.width * scale, sensor.height * scale};
  std::vector<Vec2> grid(hr.pixels());
  for (int y = 0; y < hr.height; ++y) {
    for (int x = 0; x < hr.width; ++x) {
      grid[static_cast<std::size_t>(y) * hr.width + x] = {s * sample_bilinear(ux, x / s, y / s),
                                                          s * sample_bilinear(uy, x / s, y / s)};
    }
  }
  return FlowField::dense(hr, std::move(grid));
}

MeasurementSystem build_measurement_system(const EventPacket& full, const FlowField& flow, const PipelineConfig& cfg,
                                           int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidArgument, "scale must be >= 1");
  const EventPacket packet = full.tail(cfg.n_events);
  const double s = scale;
  const SensorSize hr{packet.sensor.width * scale, packet.sensor.height * scale};

  const double t_ref = cfg.niwe.t_ref.value_or(0.5 * (packet.t_first + packet.t_last));
  std::vector<WarpedEvent> warped = warp_events(packet, flow, t_ref);
  const double xmax = hr.width - 1;
  const double ymax = hr.height - 1;
  for (WarpedEvent& w : warped) {
    w.pos = {w.pos.x * s, w.pos.y * s};
    w.in_bounds = w.pos.x >= 0.0 && w.pos.y >= 0.0 && w.pos.x <= xmax && w.pos.y <= ymax;
  }

  MeasurementSystem sys;
  sys.scale = scale;
  sys.flow = upsample_flow(flow, packet.sensor, scale);
  const Image iwe = accumulate_iwe(warped, hr, cfg.niwe.contrast * s * s, cfg.niwe.sigma_px);
  sys.niwe = normalize_iwe(iwe, sys.flow, packet.duration(), cfg.niwe.u_min);
  sys.niwe.t_ref = t_ref;
  sys.niwe.n_events = packet.size();
  sys.niwe.sigma_px = cfg.niwe.sigma_px;
  sys.niwe.contrast = cfg.niwe.contrast;
  sys.d = build_directional_operator(sys.flow, hr, cfg.stencil, cfg.niwe.u_min);
  return sys;
}

ReconResult reconstruct(const EventPacket& packet, const FlowField& flow, const PipelineConfig& cfg,
                        Denoiser* denoiser) {
  return reconstruct_superres(packet, flow, 1, cfg, denoiser);
}

ReconResult reconstruct_superres(const EventPacket& packet, const FlowField& flow, int scale, const PipelineConfig& cfg,
                                 Denoiser* denoiser) {
  const MeasurementSystem sys = build_measurement_system(packet, flow, cfg, scale);
  return solve(sys.d, sys.niwe.image, cfg.recon, denoiser);
}

// ---------------------------------------------------------------------------
// Clusters

std::vector<EventPacket> partition_events(const EventPacket& packet, const ClusterLabels& labels) {
  if (labels.ids.size() != packet.size()) {
    throw Error(ErrorCode::CountMismatch, "one label per event expected");
  }
  std::vector<std::vector<Event>> parts(labels.n_clusters);
  for (std::size_t i = 0; i < packet.size(); ++i) {
    const int id = labels.ids[i];
    if (id < 0 || id >= labels.n_clusters) throw Error(ErrorCode::InvalidArgument, "label out of range");
    parts[id].push_back(packet.events[i]);
  }
  std::vector<EventPacket> out;
  out.reserve(parts.size());
  for (auto& p : parts) out.push_back(EventPacket::from_events(std::move(p), packet.sensor));
  return out;
}

ClusterResult reconstruct_clusters(const EventPacket& packet, const ClusterLabels& labels,
                                   const std::map<int, FlowField>& flows, const PipelineConfig& cfg,
                                   Denoiser* denoiser) {
  const std::vector<EventPacket> parts = partition_events(packet, labels);
  for (int id = 0; id < labels.n_clusters; ++id) {
    if (!flows.contains(id)) {
      throw Error(ErrorCode::MissingFlow, "no flow for cluster " + std::to_string(id), -1, id);
    }
  }

  ClusterResult out;
  for (int id = 0; id < labels.n_clusters; ++id) {
    if (parts[id].empty()) {
      out.warnings.push_back("cluster " + std::to_string(id) + " has no events; writing a zero image");
      out.images.emplace_back(id, Image(packet.sensor));
      continue;
    }
    out.images.emplace_back(id, reconstruct(parts[id], flows.at(id), cfg, denoiser).image);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Color

BayerPattern parse_bayer_pattern(std::string_view name) {
  if (name == "RGGB" || name == "rggb") return BayerPattern::RGGB;
  if (name == "BGGR" || name == "bggr") return BayerPattern::BGGR;
  if (name == "GRBG" || name == "grbg") return BayerPattern::GRBG;
  if (name == "GBRG" || name == "gbrg") return BayerPattern::GBRG;
  throw Error(ErrorCode::InvalidArgument, "unknown Bayer pattern '" + std::string(name) + "'");
}

namespace {

// 0 = R, 1 = G, 2 = B at parity (x & 1, y & 1), indexed [y][x].
using SiteMap = std::array<std::array<int, 2>, 2>;

SiteMap site_map(BayerPattern p) {
  switch (p) {
    case BayerPattern::RGGB: return {{{0, 1}, {1, 2}}};
    case BayerPattern::BGGR: return {{{2, 1}, {1, 0}}};
    case BayerPattern::GRBG: return {{{1, 0}, {2, 1}}};
    case BayerPattern::GBRG: return {{{1, 2}, {0, 1}}};
  }
  return {};
}

void check_even(SensorSize s) {
  if (s.width % 2 != 0 || s.height % 2 != 0) {
    throw Error(ErrorCode::OddDimensions, "color reconstruction needs even sensor dimensions");
  }
}

}  // namespace

ColorStreams split_bayer(const EventPacket& packet, BayerPattern pattern) {
  check_even(packet.sensor);
  const SiteMap sites = site_map(pattern);
  const SensorSize half{packet.sensor.width / 2, packet.sensor.height / 2};
  std::array<std::vector<Event>, 3> parts;
  for (const Event& e : packet.events) {
    Event h = e;
    h.x = e.x / 2;
    h.y = e.y / 2;
    parts[sites[e.y & 1][e.x & 1]].push_back(h);
  }
  return {EventPacket::from_events(std::move(parts[0]), half), EventPacket::from_events(std::move(parts[1]), half),
          EventPacket::from_events(std::move(parts[2]), half)};
}

FlowField halve_flow(const FlowField& flow, SensorSize sensor) {
  check_even(sensor);
  flow.check_compatible(sensor);
  if (flow.is_global()) return FlowField::global({flow.global_velocity().x / 2, flow.global_velocity().y / 2});
  const SensorSize half{sensor.width / 2, sensor.height / 2};
  std::vector<Vec2> grid(half.pixels());
  for (int y = 0; y < half.height; ++y) {
    for (int x = 0; x < half.width; ++x) {
      Vec2 acc;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const Vec2 u = flow.at(2 * x + dx, 2 * y + dy);
          acc.x += u.x;
          acc.y += u.y;
        }
      }
      grid[static_cast<std::size_t>(y) * half.width + x] = {acc.x / 8, acc.y / 8};
    }
  }
  return FlowField::dense(half, std::move(grid));
}

ColorResult reconstruct_color(const EventPacket& packet, const FlowField& flow, BayerPattern pattern,
                              const PipelineConfig& cfg, Denoiser* denoiser) {
  const ColorStreams streams = split_bayer(packet, pattern);
  const FlowField half_flow = halve_flow(flow, packet.sensor);

  auto channel = [&](const EventPacket& sub, double contrast_factor) {
    if (sub.empty()) return Image(packet.sensor);
    PipelineConfig c = cfg;
    c.niwe.contrast *= contrast_factor;
    return reconstruct_superres(sub, half_flow, 2, c, denoiser).image;
  };
  return {channel(streams.r, 1.0), channel(streams.g, 0.5), channel(streams.b, 1.0)};
}

// ---------------------------------------------------------------------------

FlowField corrupt_flow(const FlowField& flow, double b, std::uint64_t seed) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "noise bound must be >= 0");
  if (flow.is_global()) throw Error(ErrorCode::InvalidArgument, "flow corruption needs a dense field");
  if (b == 0.0) return flow;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-b, b);
  std::vector<Vec2> grid = flow.grid();
  for (Vec2& u : grid) {
    u.x += noise(rng);
    u.y += noise(rng);
  }
  return FlowField::dense(flow.size(), std::move(grid));
}

}  // namespace evrec
