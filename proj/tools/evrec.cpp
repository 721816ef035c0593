// evrec: brightness reconstruction from events and optical flow.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evrec/denoise.hpp"
#include "evrec/error.hpp"
#include "evrec/event_io.hpp"
#include "evrec/extensions.hpp"
#include "evrec/kernels.hpp"
#include "evrec/metrics.hpp"
#include "evrec/motion.hpp"
#include "evrec/poisson.hpp"
#include "evrec/regularizers.hpp"

namespace fs = std::filesystem;
using namespace evrec;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    case ErrorCode::BreakdownNonSPD:
    case ErrorCode::NonPositiveDt:
    case ErrorCode::NonPositiveMu:
    case ErrorCode::DenoiserFailure:
    case ErrorCode::ChildSpawnError:
    case ErrorCode::ProtocolError:
    case ErrorCode::Timeout:
      return kExitNumerical;
    default:
      return kExitIo;
  }
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

// Every input file is read once, parsed from memory and digested for the
// reproducibility header.
struct Inputs {
  std::vector<std::pair<std::string, std::string>> digests;

  std::string load(const std::string& role, const std::string& path) {
    std::string bytes = read_file(path);
    digests.emplace_back(role, path + " sha256=" + sha256_hex(bytes));
    return bytes;
  }
};

// Key/value pairs recorded as '#' header lines in trace and report files.
using Params = std::vector<std::pair<std::string, std::string>>;

Image load_image(const std::string& bytes) {
  std::istringstream in(bytes);
  if (bytes.compare(0, 2, "P5") == 0) return read_pgm(in);
  return read_float_image(in);
}

void write_display_pgm(const Image& img, const std::string& path, int bit_depth) {
  const Image mapped = percentile_map(img, 1.0, 99.0);
  auto out = open_out(path);
  write_pgm(mapped, out, bit_depth);
}

void write_trace(const std::string& path, const Params& params, const Inputs& inputs, const ReconResult& r) {
  auto out = open_out(path);
  out << "# evrec trace\n";
  for (const auto& [k, v] : params) out << "# " << k << '=' << v << '\n';
  for (const auto& [k, v] : inputs.digests) out << "# input." << k << '=' << v << '\n';
  out << "iteration,data,prior,total,gap\n";
  auto row = [&](std::size_t i, const TraceEntry& e) {
    out << i << ',' << fmt(e.data_term) << ',' << fmt(e.prior_term) << ',' << fmt(e.total) << ',' << fmt(e.gap)
        << '\n';
  };
  row(0, r.initial);
  for (std::size_t i = 0; i < r.trace.size(); ++i) row(i + 1, r.trace[i]);
}

void report_solver(const ReconResult& r) {
  std::cerr << "solver: iterations=" << r.report.iterations << " residual=" << fmt(r.report.final_residual)
            << " converged=" << (r.report.converged ? "yes" : "no") << '\n';
  if (!r.report.converged) std::cerr << "warning: solver stopped before reaching its tolerance\n";
}

// ---------------------------------------------------------------------------
// Shared options

struct SensorOpts {
  int width = 240;
  int height = 180;
  std::string time_unit = "s";

  void add(CLI::App* app) {
    app->add_option("--width", width, "Sensor width in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--height", height, "Sensor height in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--time-unit", time_unit, "Event timestamp unit")
        ->capture_default_str()
        ->check(CLI::IsMember({"s", "us"}));
  }
  SensorSize sensor() const { return {width, height}; }
  TimeUnit unit() const { return time_unit == "us" ? TimeUnit::Microseconds : TimeUnit::Seconds; }
};

struct SolverOpts {
  std::string method = "tikhonov";
  std::optional<double> lambda;
  std::string denoiser = "tv";
  double gain = 3.0;
  int lsqr_iters = 100;
  int tv_outer = 20;
  int tv_inner = 10;
  int pnp_outer = 16;
  double sigma_max = 0.25;
  double sigma_min = 0.01;
  std::string init = "tv";

  void add(CLI::App* app, bool with_method = true) {
    if (with_method) {
      app->add_option("--method", method, "Regularizer")
          ->capture_default_str()
          ->check(CLI::IsMember({"tikhonov", "tv", "pnp"}));
    }
    app->add_option("--lambda", lambda, "Regularization weight (0.04 for tikhonov/tv, 0.3 for pnp)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--denoiser", denoiser, "PnP denoiser: identity, gaussian, tv or bridge:CMD")->capture_default_str();
    app->add_option("--gain", gain, "Gaussian denoiser blur per unit sigma, in pixels")->capture_default_str();
    app->add_option("--iters", lsqr_iters, "LSQR iterations (tikhonov)")->capture_default_str();
    app->add_option("--tv-outer", tv_outer, "Bregman updates (tv)")->capture_default_str();
    app->add_option("--tv-inner", tv_inner, "CG iterations per Bregman update (tv)")->capture_default_str();
    app->add_option("--pnp-outer", pnp_outer, "HQS iterations (pnp)")->capture_default_str();
    app->add_option("--sigma-max", sigma_max, "First denoiser level (pnp)")->capture_default_str();
    app->add_option("--sigma-min", sigma_min, "Last denoiser level (pnp)")->capture_default_str();
    app->add_option("--init", init, "PnP initialization")->capture_default_str()->check(CLI::IsMember({"zero", "tv"}));
  }

  ReconConfig config() const {
    const Method m = method == "tv" ? Method::TV : method == "pnp" ? Method::PnP : Method::Tikhonov;
    ReconConfig cfg = ReconConfig::defaults_for(m);
    if (lambda) cfg.lambda = *lambda;
    cfg.tikhonov.lsqr_iters = lsqr_iters;
    cfg.tv.outer = tv_outer;
    cfg.tv.inner = tv_inner;
    cfg.pnp.n_outer = pnp_outer;
    cfg.pnp.sigma_max = sigma_max;
    cfg.pnp.sigma_min = sigma_min;
    cfg.init = init == "zero" ? PnpInit::Zero : PnpInit::FromTV;
    cfg.validate();
    return cfg;
  }

  std::unique_ptr<Denoiser> make() const {
    return method == "pnp" ? make_denoiser(denoiser, gain) : nullptr;
  }

  void record(Params& p, const ReconConfig& cfg) const {
    p.emplace_back("method", method);
    p.emplace_back("lambda", fmt(cfg.lambda));
    if (method == "tikhonov") p.emplace_back("lsqr_iters", std::to_string(lsqr_iters));
    if (method == "tv") {
      p.emplace_back("tv_outer", std::to_string(tv_outer));
      p.emplace_back("tv_inner", std::to_string(tv_inner));
    }
    if (method == "pnp") {
      p.emplace_back("denoiser", denoiser);
      p.emplace_back("gain", fmt(gain));
      p.emplace_back("pnp_outer", std::to_string(pnp_outer));
      p.emplace_back("sigma_max", fmt(sigma_max));
      p.emplace_back("sigma_min", fmt(sigma_min));
      p.emplace_back("init", init);
      std::string mu;
      for (double m : cfg.mu_schedule()) mu += (mu.empty() ? "" : " ") + fmt(m);
      p.emplace_back("mu_schedule", mu);
    }
  }
};

struct PipelineOpts {
  SensorOpts sensor;
  SolverOpts solver;
  std::string events;
  std::string stencil = "2pt";
  std::size_t n_events = 30000;
  double sigma_px = 1.0;
  double contrast = 0.1;
  std::optional<double> t_ref;
  std::string trace;
  int bit_depth = 8;

  void add(CLI::App* app) {
    sensor.add(app);
    solver.add(app);
    app->add_option("--events", events, "Event file, one 't x y p' per line")->required();
    app->add_option("--stencil", stencil, "Directional derivative stencil")
        ->capture_default_str()
        ->check(CLI::IsMember({"2pt", "sobel9"}));
    app->add_option("--n-events", n_events, "Most recent events used (0 = all); 20k-50k works well")
        ->capture_default_str();
    app->add_option("--sigma-px", sigma_px, "IWE blur in output pixels")->capture_default_str();
    app->add_option("--contrast", contrast, "Event contrast threshold C")->capture_default_str();
    app->add_option("--t-ref", t_ref, "Reference time (default: packet midpoint)");
    app->add_option("--trace", trace, "Per-iteration energy CSV with a reproducibility header");
    app->add_option("--bit-depth", bit_depth, "PGM bit depth")->capture_default_str()->check(CLI::IsMember({8, 16}));
  }

  PipelineConfig config() const {
    PipelineConfig cfg;
    cfg.niwe.contrast = contrast;
    cfg.niwe.sigma_px = sigma_px;
    cfg.niwe.t_ref = t_ref;
    cfg.stencil = stencil == "sobel9" ? StencilKind::Sobel9 : StencilKind::TwoPoint;
    cfg.recon = solver.config();
    cfg.n_events = n_events;
    return cfg;
  }

  Params record(const PipelineConfig& cfg) const {
    Params p;
    p.emplace_back("sensor", std::to_string(sensor.width) + "x" + std::to_string(sensor.height));
    p.emplace_back("time_unit", sensor.time_unit);
    p.emplace_back("stencil", stencil);
    p.emplace_back("n_events", std::to_string(n_events));
    p.emplace_back("sigma_px", fmt(sigma_px));
    p.emplace_back("contrast", fmt(contrast));
    p.emplace_back("t_ref", t_ref ? fmt(*t_ref) : "midpoint");
    solver.record(p, cfg.recon);
    p.emplace_back("threads", std::to_string(kernels::max_threads()));
    return p;
  }

  EventPacket load_events(Inputs& inputs) const {
    const std::string bytes = inputs.load("events", events);
    std::istringstream in(bytes);
    return parse_events(in, sensor.sensor(), sensor.unit());
  }
};

FlowField load_flow(Inputs& inputs, const std::string& role, const std::string& path, SensorSize sensor) {
  const std::string bytes = inputs.load(role, path);
  std::istringstream in(bytes);
  return parse_flow(in, sensor);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brightness reconstruction from events and optical flow"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  // reconstruct / superres
  PipelineOpts rec;
  std::string rec_flow, rec_out = "out.pgm";
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct one image from events and flow");
  rec.add(reconstruct);
  reconstruct->add_option("--flow", rec_flow, "Flow file: 'ux uy' text or dense container")->required();
  reconstruct->add_option("--out", rec_out, "Output PGM")->capture_default_str();

  PipelineOpts sr;
  std::string sr_flow, sr_out = "superres.pgm";
  int sr_scale = 2;
  auto* superres = app.add_subcommand("superres", "Reconstruct at an integer multiple of the sensor resolution");
  sr.add(superres);
  superres->add_option("--flow", sr_flow, "Flow file at sensor resolution")->required();
  superres->add_option("--scale", sr_scale, "Upsampling factor")->capture_default_str()->check(CLI::IsMember({1, 2, 4}));
  superres->add_option("--out", sr_out, "Output PGM")->capture_default_str();

  PipelineOpts col;
  std::string col_flow, col_out = "color.ppm", col_bayer = "RGGB";
  auto* color = app.add_subcommand("color", "Per-channel reconstruction from a Bayer event sensor");
  col.add(color);
  color->add_option("--flow", col_flow, "Flow file at sensor resolution")->required();
  color->add_option("--bayer", col_bayer, "Mosaic layout")
      ->capture_default_str()
      ->check(CLI::IsMember({"RGGB", "BGGR", "GRBG", "GBRG"}));
  color->add_option("--out", col_out, "Output PPM; planes go next to it as _r/_g/_b PGMs")->capture_default_str();

  PipelineOpts cl;
  std::string cl_labels, cl_flows, cl_out = "cluster.pgm";
  auto* clusters = app.add_subcommand("clusters", "Reconstruct each labelled event cluster with its own flow");
  cl.add(clusters);
  clusters->add_option("--labels", cl_labels, "One cluster id per event")->required();
  clusters->add_option("--flows", cl_flows, "Comma-separated flow files in ascending cluster id order")->required();
  clusters->add_option("--out", cl_out, "Output PGM name; the cluster id is appended to the stem")
      ->capture_default_str();

  // poisson
  SolverOpts po_solver;
  po_solver.method = "pnp";
  std::string po_lap, po_method = "pnp", po_boundary = "periodic", po_out = "poisson.pgm", po_trace;
  auto* poisson = app.add_subcommand("poisson", "Reconstruct from a Laplacian image");
  poisson->add_option("--laplacian", po_lap, "Laplacian as a float container or PGM")->required();
  poisson->add_option("--method", po_method, "pnp or direct")->capture_default_str()->check(CLI::IsMember({"pnp", "direct"}));
  poisson->add_option("--boundary", po_boundary, "Boundary handling")
      ->capture_default_str()
      ->check(CLI::IsMember({"periodic", "neumann"}));
  po_solver.add(poisson, false);
  poisson->add_option("--out", po_out, "Output PGM")->capture_default_str();
  poisson->add_option("--trace", po_trace, "Per-iteration energy CSV");

  // flow-cmax
  SensorOpts fc_sensor;
  std::string fc_events, fc_out;
  double fc_range = 50.0, fc_step = 1.0;
  std::size_t fc_n = 0;
  auto* flow_cmax = app.add_subcommand("flow-cmax", "Global flow by contrast maximization over a velocity grid");
  fc_sensor.add(flow_cmax);
  flow_cmax->add_option("--events", fc_events, "Event file")->required();
  flow_cmax->add_option("--range", fc_range, "Search |ux|, |uy| <= range (px/s)")->capture_default_str();
  flow_cmax->add_option("--step", fc_step, "Grid step (px/s)")->capture_default_str()->check(CLI::PositiveNumber);
  flow_cmax->add_option("--n-events", fc_n, "Most recent events used (0 = all)")->capture_default_str();
  flow_cmax->add_option("--out", fc_out, "Write the estimate as a global flow file");

  // metrics
  std::string me_pred, me_gt, me_csv;
  bool me_equalize = false, me_align = false;
  auto* metrics = app.add_subcommand("metrics", "MSE and SSIM of a prediction against ground truth");
  metrics->add_option("--pred", me_pred, "Prediction (PGM or float container)")->required();
  metrics->add_option("--gt", me_gt, "Ground truth (PGM or float container)")->required();
  metrics->add_flag("--equalize", me_equalize, "Histogram-equalize both images first");
  metrics->add_flag("--align", me_align, "Affine-align the prediction to the ground truth");
  metrics->add_option("--csv", me_csv, "Append a row to this CSV file");

  // simulate
  std::string si_video, si_out = "events.txt";
  double si_contrast = 0.1, si_eps = 1e-3;
  auto* simulate = app.add_subcommand("simulate", "Ideal event generation from a frame sequence");
  simulate->add_option("--video", si_video, "Directory of PGM frames (sorted by name) and timestamps.txt")->required();
  simulate->add_option("--contrast", si_contrast, "Contrast threshold C")->capture_default_str();
  simulate->add_option("--log-eps", si_eps, "Offset in log(I + eps)")->capture_default_str();
  simulate->add_option("--out", si_out, "Output event file")->capture_default_str();

  // corrupt-flow
  SensorOpts cf_sensor;
  std::string cf_flow, cf_out = "flow_noisy.bin";
  double cf_b = 0.0;
  std::uint64_t cf_seed = 0;
  auto* corrupt = app.add_subcommand("corrupt-flow", "Add uniform noise in [-b, b] to a flow field");
  cf_sensor.add(corrupt);
  corrupt->add_option("--flow", cf_flow, "Flow file")->required();
  corrupt->add_option("--b", cf_b, "Noise bound in px/s")->required()->check(CLI::NonNegativeNumber);
  corrupt->add_option("--seed", cf_seed, "Random seed")->capture_default_str();
  corrupt->add_option("--out", cf_out, "Output dense flow container")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kExitUsage;
  }

  if (jobs > 0) kernels::set_threads(jobs);

  try {
    Inputs inputs;

    auto run_pipeline = [&](PipelineOpts& o, const std::string& flow_path, int scale, const std::string& out_path,
                            const char* name) {
      const PipelineConfig cfg = o.config();
      const EventPacket packet = o.load_events(inputs);
      const FlowField flow = load_flow(inputs, "flow", flow_path, o.sensor.sensor());
      auto denoiser = o.solver.make();
      const ReconResult r = reconstruct_superres(packet, flow, scale, cfg, denoiser.get());
      report_solver(r);
      write_display_pgm(r.image, out_path, o.bit_depth);
      if (!o.trace.empty()) {
        Params p = o.record(cfg);
        p.insert(p.begin(), {"command", name});
        if (scale != 1) p.emplace_back("scale", std::to_string(scale));
        write_trace(o.trace, p, inputs, r);
      }
    };

    if (*reconstruct) {
      run_pipeline(rec, rec_flow, 1, rec_out, "reconstruct");
    } else if (*superres) {
      run_pipeline(sr, sr_flow, sr_scale, sr_out, "superres");
    } else if (*color) {
      const PipelineConfig cfg = col.config();
      const EventPacket packet = col.load_events(inputs);
      const FlowField flow = load_flow(inputs, "flow", col_flow, col.sensor.sensor());
      auto denoiser = col.solver.make();
      const ColorResult c = reconstruct_color(packet, flow, parse_bayer_pattern(col_bayer), cfg, denoiser.get());
      // One display range for all planes keeps the channel balance.
      std::vector<double> all;
      for (const Image* plane : {&c.r, &c.g, &c.b}) all.insert(all.end(), plane->data.begin(), plane->data.end());
      const double lo = percentile(all, 1.0);
      const double hi = percentile(all, 99.0);
      const Image r = map_range(c.r, lo, hi), g = map_range(c.g, lo, hi), b = map_range(c.b, lo, hi);
      auto out = open_out(col_out);
      write_ppm(r, g, b, out);
      const std::pair<const char*, const Image*> planes[] = {{"_r", &r}, {"_g", &g}, {"_b", &b}};
      for (const auto& [suffix, plane] : planes) {
        auto f = open_out(with_suffix(fs::path(col_out).replace_extension(".pgm").string(), suffix));
        write_pgm(*plane, f, col.bit_depth);
      }
    } else if (*clusters) {
      const PipelineConfig cfg = cl.config();
      const EventPacket packet = cl.load_events(inputs);
      const std::string label_bytes = inputs.load("labels", cl_labels);
      std::istringstream label_in(label_bytes);
      const ClusterLabels labels = parse_labels(label_in, packet.size());
      std::map<int, FlowField> flows;
      const auto paths = split_commas(cl_flows);
      for (std::size_t i = 0; i < paths.size(); ++i) {
        flows.emplace(static_cast<int>(i), load_flow(inputs, "flow" + std::to_string(i), paths[i], cl.sensor.sensor()));
      }
      auto denoiser = cl.solver.make();
      const ClusterResult res = reconstruct_clusters(packet, labels, flows, cfg, denoiser.get());
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& [id, img] : res.images) {
        write_display_pgm(img, with_suffix(cl_out, "_" + std::to_string(id)), cl.bit_depth);
      }
    } else if (*poisson) {
      const Image c = load_image(inputs.load("laplacian", po_lap));
      const BoundaryMode mode = po_boundary == "neumann" ? BoundaryMode::Neumann : BoundaryMode::Periodic;
      ReconResult r;
      ReconConfig cfg;
      if (po_method == "direct") {
        r.image = subtract_mean(poisson_direct(c, mode));
        r.report.converged = true;
      } else {
        cfg = po_solver.config();
        auto denoiser = make_denoiser(po_solver.denoiser, po_solver.gain);
        r = solve_poisson_pnp(c, *denoiser, cfg, mode);
      }
      write_display_pgm(r.image, po_out, 8);
      if (!po_trace.empty()) {
        Params p{{"command", "poisson"}, {"method", po_method}, {"boundary", po_boundary}};
        if (po_method == "pnp") {
          Params s;
          po_solver.record(s, cfg);
          p.insert(p.end(), s.begin() + 1, s.end());
        }
        write_trace(po_trace, p, inputs, r);
      }
    } else if (*flow_cmax) {
      const std::string bytes = inputs.load("events", fc_events);
      std::istringstream in(bytes);
      const EventPacket packet = parse_events(in, fc_sensor.sensor(), fc_sensor.unit()).tail(fc_n);
      const FlowField u = estimate_global_flow_cmax(packet, VelocityGrid::symmetric(fc_range, fc_step));
      std::cout << "ux=" << fmt(u.global_velocity().x) << " uy=" << fmt(u.global_velocity().y) << '\n';
      if (!fc_out.empty()) {
        auto out = open_out(fc_out);
        write_flow(u, out);
      }
    } else if (*metrics) {
      const Image pred = load_image(read_file(me_pred));
      const Image gt = load_image(read_file(me_gt));
      const MetricReport m = evaluate(pred, gt, me_equalize, me_align);
      std::cout << "ssim=" << fmt(m.ssim) << " mse=" << fmt(m.mse);
      if (me_align) std::cout << " alpha=" << fmt(m.fit.alpha) << " beta=" << fmt(m.fit.beta);
      std::cout << '\n';
      if (!me_csv.empty()) {
        const bool fresh = !fs::exists(me_csv);
        std::ofstream out(me_csv, std::ios::app);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + me_csv + "'");
        if (fresh) out << "pred,gt,equalize,align,ssim,mse\n";
        out << me_pred << ',' << me_gt << ',' << me_equalize << ',' << me_align << ',' << fmt(m.ssim) << ','
            << fmt(m.mse) << '\n';
      }
    } else if (*simulate) {
      std::vector<fs::path> files;
      if (!fs::is_directory(si_video)) throw Error(ErrorCode::Io, "'" + si_video + "' is not a directory");
      for (const auto& entry : fs::directory_iterator(si_video)) {
        if (entry.path().extension() == ".pgm") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      std::vector<Image> frames;
      for (const auto& f : files) {
        Image img = load_image(read_file(f.string()));
        for (double& v : img.data) v = std::log(v + si_eps);
        frames.push_back(std::move(img));
      }
      std::vector<double> stamps;
      std::istringstream ts(read_file((fs::path(si_video) / "timestamps.txt").string()));
      for (double t; ts >> t;) stamps.push_back(t);
      const EventPacket packet = simulate_events(frames, stamps, si_contrast);
      auto out = open_out(si_out);
      serialize_events(packet, out);
      std::cerr << "simulate: " << packet.size() << " events from " << frames.size() << " frames\n";
    } else if (*corrupt) {
      const FlowField flow = load_flow(inputs, "flow", cf_flow, cf_sensor.sensor()).to_dense(cf_sensor.sensor());
      const FlowField noisy = corrupt_flow(flow, cf_b, cf_seed);
      auto out = open_out(cf_out);
      write_flow(noisy, out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
