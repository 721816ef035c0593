#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evrec/denoise.hpp"
#include "evrec/event_io.hpp"
#include "evrec/motion.hpp"
#include "evrec/regularizers.hpp"
#include "evrec/sparse_operator.hpp"

namespace evrec {

struct PipelineConfig {
  NiweOptions niwe;  // sigma_px is measured on the output grid
  StencilKind stencil = StencilKind::TwoPoint;
  ReconConfig recon;
  std::size_t n_events = 0;  // most recent events used; 0 = all
};

/// The linear system D l = b at some output resolution.
struct MeasurementSystem {
  Niwe niwe;
  SparseOperator d;
  FlowField flow;  // at the output resolution
  int scale = 1;
};

/// Bilinear flow upsampling: high-res pixel X samples the low-res field at
/// X / scale; velocities are multiplied by scale.
FlowField upsample_flow(const FlowField& flow, SensorSize sensor, int scale);

/// Warps events at sensor resolution, multiplies warped coordinates by
/// `scale`, votes on the scaled grid and builds D there. The NIWE carries an
/// extra scale^2 area factor so that b stays a per-pixel directional
/// difference on the finer grid.
MeasurementSystem build_measurement_system(const EventPacket& packet, const FlowField& flow, const PipelineConfig& cfg,
                                           int scale = 1);

ReconResult reconstruct(const EventPacket& packet, const FlowField& flow, const PipelineConfig& cfg,
                        Denoiser* denoiser = nullptr);

/// Output is scale*width x scale*height; scale 1 is the plain pipeline.
ReconResult reconstruct_superres(const EventPacket& packet, const FlowField& flow, int scale, const PipelineConfig& cfg,
                                 Denoiser* denoiser = nullptr);

struct ClusterResult {
  std::vector<std::pair<int, Image>> images;  // one per cluster id, ascending
  std::vector<std::string> warnings;
};

/// Events grouped by cluster id, time order kept. Throws CountMismatch.
std::vector<EventPacket> partition_events(const EventPacket& packet, const ClusterLabels& labels);

/// Splits events by label and runs the pipeline per cluster with its own
/// flow. A cluster without events yields a zero image and a warning.
/// Throws MissingFlow (detail() = cluster id) when a cluster has no flow.
ClusterResult reconstruct_clusters(const EventPacket& packet, const ClusterLabels& labels,
                                   const std::map<int, FlowField>& flows, const PipelineConfig& cfg,
                                   Denoiser* denoiser = nullptr);

enum class BayerPattern { RGGB, BGGR, GRBG, GBRG };

BayerPattern parse_bayer_pattern(std::string_view name);

struct ColorResult {
  Image r, g, b;
};

struct ColorStreams {
  EventPacket r, g, b;  // half resolution
};

/// Parity split into half-resolution sub-streams; the two green sites merge.
ColorStreams split_bayer(const EventPacket& packet, BayerPattern pattern);

/// Half-resolution flow: 2x2 block average, velocities halved.
FlowField halve_flow(const FlowField& flow, SensorSize sensor);

/// Per-channel 2x super-resolution from the half-resolution sub-streams. The
/// merged green stream votes with half the contrast. Throws OddDimensions.
ColorResult reconstruct_color(const EventPacket& packet, const FlowField& flow, BayerPattern pattern,
                              const PipelineConfig& cfg, Denoiser* denoiser = nullptr);

/// Adds independent uniform noise in [-b, b] to both components of every
/// pixel of a dense field. Reproducible for a given seed.
FlowField corrupt_flow(const FlowField& flow, double b, std::uint64_t seed);

}  // namespace evrec
