#include "testkit.hpp"

#include <cmath>
#include <numbers>

#include "evrec/motion.hpp"
#include "evrec/poisson.hpp"

namespace testkit {

double blobs_at(const std::vector<Blob>& blobs, double x, double y) {
  double v = 0.0;
  for (const Blob& b : blobs) {
    const double dx = x - b.cx, dy = y - b.cy;
    v += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
  }
  return v;
}

Image render_blobs(SensorSize s, const std::vector<Blob>& blobs) {
  Image img(s);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) img.at(x, y) = blobs_at(blobs, x, y);
  return img;
}

double Texture::at(double x, double y) const {
  double v = 0.0;
  for (const Wave& w : waves) v += w.amp * std::sin(2 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
  return v;
}

Vec2 Texture::grad(double x, double y) const {
  Vec2 g;
  for (const Wave& w : waves) {
    const double c = w.amp * 2 * std::numbers::pi * std::cos(2 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
    g.x += c * w.fx;
    g.y += c * w.fy;
  }
  return g;
}

Texture random_texture(std::uint64_t seed, int width, int height, double amp, int min_cycles, int max_cycles) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cx(min_cycles, max_cycles), cy(0, 2);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi), share(0.6, 1.4);
  Texture t;
  for (int i = 0; i < 3; ++i) {
    t.waves.push_back({amp / 3 * share(rng), static_cast<double>(cx(rng)) / width,
                       static_cast<double>(cy(rng)) / height, phase(rng)});
  }
  return t;
}

Image render(const Texture& tex, SensorSize s, Vec2 shift) {
  Image img(s);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) img.at(x, y) = tex.at(x - shift.x, y - shift.y);
  return img;
}

std::vector<Image> translate_frames(const Texture& tex, SensorSize s, Vec2 u, const std::vector<double>& times) {
  std::vector<Image> out;
  for (double t : times) out.push_back(render(tex, s, {u.x * t, u.y * t}));
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

evrec::FlowField sink_flow(SensorSize s, double speed) {
  std::vector<Vec2> grid(s.pixels());
  const double cx = (s.width - 1) / 2.0 + 0.37, cy = (s.height - 1) / 2.0 + 0.21;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const double dx = cx - x, dy = cy - y;
      const double r = std::hypot(dx, dy);
      grid[static_cast<std::size_t>(y) * s.width + x] = {speed * dx / r, speed * dy / r};
    }
  }
  return evrec::FlowField::dense(s, std::move(grid));
}

Eigen::MatrixXd dense(const evrec::SparseOperator& op) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(op.rows()), static_cast<Eigen::Index>(op.cols()));
  for (std::size_t r = 0; r < op.rows(); ++r) {
    const auto cols = op.row_cols(r);
    const auto vals = op.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) m(static_cast<Eigen::Index>(r), cols[k]) += vals[k];
  }
  return m;
}

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> stdvec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Image random_image(std::mt19937_64& rng, int w, int h, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Image img(w, h);
  for (double& v : img.data) v = d(rng);
  return img;
}

double rel_l2(const Image& a, const Image& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    num += (a.data[i] - ref.data[i]) * (a.data[i] - ref.data[i]);
    den += ref.data[i] * ref.data[i];
  }
  return std::sqrt(num / den);
}

PoissonNoiseInstance poisson_noise_instance(std::uint64_t seed) {
  const SensorSize s{64, 64};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(10, 54), width(3, 8), amp(-1, 1);
  std::vector<Blob> blobs;
  for (int i = 0; i < 6; ++i) {
    const double cx = pos(rng), cy = pos(rng), sg = width(rng);
    blobs.push_back({cx, cy, sg, amp(rng)});
  }
  PoissonNoiseInstance out;
  out.truth = render_blobs(s, blobs);
  for (int y = 20; y < 40; ++y)
    for (int x = 15; x < 35; ++x) out.truth.at(x, y) += 0.5;
  out.c = evrec::apply_laplacian(out.truth, evrec::BoundaryMode::Periodic);
  double peak = 0;
  for (double v : out.c.data) peak = std::max(peak, std::abs(v));
  for (double& v : out.c.data) v *= 0.6 / peak;
  for (double& v : out.truth.data) v *= 0.6 / peak;
  std::normal_distribution<double> noise(0, 0.02);
  for (double& v : out.c.data) v += noise(rng);
  return out;
}

SuperresInstance superres_instance(std::uint64_t seed) {
  const SensorSize hr{128, 128};
  const Texture tex = random_texture(seed, 128, 128, 1.0, 4, 8);
  const auto times = linspace(0.0, 0.1, 41);
  std::vector<Image> frames;
  for (double t : times) frames.push_back(evrec::downsample_box(render(tex, hr, {40 * t, 0}), 2));
  SuperresInstance out;
  out.packet = evrec::simulate_events(frames, times, 0.1);
  out.flow = evrec::FlowField::global({20, 0});
  const double t_ref = 0.5 * (out.packet.t_first + out.packet.t_last);
  // high-res pixel X sits at low-res coordinate X / 2, half a pixel left of
  // the centre of the 2x2 block it was averaged into
  out.truth_hr = render(tex, hr, {40 * t_ref - 0.5, 0});
  return out;
}

}  // namespace testkit
