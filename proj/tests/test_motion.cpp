#include <doctest.h>

#include <cmath>
#include <random>

#include "evrec/metrics.hpp"
#include "evrec/motion.hpp"
#include "testkit.hpp"

using namespace evrec;
using testkit::error_code;

namespace {

EventPacket packet_of(std::vector<Event> ev, SensorSize s) { return EventPacket::from_events(std::move(ev), s); }

// Brute force: bilinear splat then 2D truncated Gaussian with zero padding.
Image dense_iwe_oracle(const std::vector<WarpedEvent>& warped, SensorSize s, double c, double sigma) {
  Image votes(s);
  for (const auto& w : warped) {
    if (!w.in_bounds) continue;
    const int x0 = static_cast<int>(std::floor(w.pos.x)), y0 = static_cast<int>(std::floor(w.pos.y));
    const double fx = w.pos.x - x0, fy = w.pos.y - y0;
    const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int dx[4] = {0, 1, 0, 1}, dy[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k) {
      if (s.contains(x0 + dx[k], y0 + dy[k])) votes.at(x0 + dx[k], y0 + dy[k]) += c * w.polarity * wts[k];
    }
  }
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k2((2 * r + 1) * (2 * r + 1));
  double sum = 0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) sum += k2[(j + r) * (2 * r + 1) + i + r] = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
  Image out(s);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x)
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i)
          if (s.contains(x - i, y - j)) out.at(x, y) += k2[(j + r) * (2 * r + 1) + i + r] / sum * votes.at(x - i, y - j);
  return out;
}

double total(const Image& img) {
  double s = 0;
  for (double v : img.data) s += v;
  return s;
}

}  // namespace

TEST_SUITE("motion") {

TEST_CASE("warp arithmetic") {
  const SensorSize s{10, 10};
  auto w = warp_events(packet_of({{1.0, 5, 5, 1}}, s), FlowField::global({1, 0}), 0.0);
  CHECK(w[0].pos == Vec2{4, 5});
  CHECK(w[0].in_bounds);

  w = warp_events(packet_of({{0.3, 5, 5, -1}}, s), FlowField::global({7, -3}), 0.3);
  CHECK(w[0].pos == Vec2{5, 5});
  CHECK(w[0].polarity == -1);

  w = warp_events(packet_of({{0.5, 0, 0, 1}}, s), FlowField::global({4, 0}), 0.0);
  CHECK(w[0].pos == Vec2{-2, 0});
  CHECK_FALSE(w[0].in_bounds);

  // the far edge itself is still in bounds
  w = warp_events(packet_of({{0.0, 9, 9, 1}}, s), FlowField::global({0, 0}), 0.0);
  CHECK(w[0].in_bounds);
}

TEST_CASE("dense flow is sampled at the event pixel") {
  const SensorSize s{4, 4};
  std::vector<Vec2> grid(16, Vec2{0, 0});
  grid[2 * 4 + 1] = {2, 4};
  const auto flow = FlowField::dense(s, grid);
  const auto w = warp_events(packet_of({{0.5, 1, 2, 1}, {0.5, 2, 2, 1}}, s), flow, 0.0);
  CHECK(w[0].pos == Vec2{0, 0});
  CHECK(w[1].pos == Vec2{2, 2});
}

TEST_CASE("zero flow warp is the identity on positions") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> xs(0, 31);
  std::uniform_real_distribution<double> ts(0, 1);
  std::vector<Event> ev;
  double t = 0;
  for (int i = 0; i < 100; ++i) ev.push_back({t += ts(rng), xs(rng), xs(rng), 1});
  const auto w = warp_events(packet_of(ev, {32, 32}), FlowField::global({0, 0}), 17.0);
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(w[i].pos == Vec2{double(ev[i].x), double(ev[i].y)});
}

TEST_CASE("bilinear vote of a single event") {
  std::vector<WarpedEvent> w{{{2.5, 3.0}, 1, true}};
  const Image img = accumulate_iwe(w, {6, 6}, 1.0, 0.0);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      const double expect = (y == 3 && (x == 2 || x == 3)) ? 0.5 : 0.0;
      CHECK(img.at(x, y) == expect);
    }
}

TEST_CASE("accumulation matches a dense convolution oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(0.0, 15.0);
  std::bernoulli_distribution pol(0.5);
  std::vector<WarpedEvent> w;
  for (int i = 0; i < 10; ++i) w.push_back({{pos(rng), pos(rng)}, pol(rng) ? 1 : -1, true});
  const Image got = accumulate_iwe(w, {16, 16}, 0.3, 1.0);
  const Image want = dense_iwe_oracle(w, {16, 16}, 0.3, 1.0);
  for (std::size_t i = 0; i < got.pixels(); ++i) CHECK(std::abs(got.data[i] - (want.data[i])) < 1e-12);
}

TEST_CASE("accumulation is linear and conserves mass") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(6.0, 25.0);
  std::vector<WarpedEvent> a, b;
  int psum = 0;
  for (int i = 0; i < 40; ++i) {
    const int p = i % 3 == 0 ? -1 : 1;
    psum += p;
    (i % 2 ? a : b).push_back({{pos(rng), pos(rng)}, p, true});
  }
  std::vector<WarpedEvent> both = a;
  both.insert(both.end(), b.begin(), b.end());
  const SensorSize s{32, 32};
  const Image ia = accumulate_iwe(a, s, 0.1, 1.5);
  const Image ib = accumulate_iwe(b, s, 0.1, 1.5);
  const Image iab = accumulate_iwe(both, s, 0.1, 1.5);
  for (std::size_t i = 0; i < iab.pixels(); ++i) CHECK(std::abs(iab.data[i] - (ia.data[i] + ib.data[i])) < 1e-14);
  CHECK(total(iab) == doctest::Approx(0.1 * psum).epsilon(1e-12));
}

TEST_CASE("out of bounds events contribute nothing") {
  std::vector<WarpedEvent> w{{{-2.0, 0.0}, 1, false}};
  const Image img = accumulate_iwe(w, {5, 5}, 1.0, 1.0);
  CHECK(total(img) == 0.0);
}

TEST_CASE("normalization arithmetic and zero rules") {
  Image iwe(5, 5, 2.0);
  Niwe n = normalize_iwe(iwe, FlowField::global({0, 4}), 0.5);
  CHECK(n.image.at(2, 2) == 1.0);
  for (int i = 0; i < 5; ++i) {
    CHECK(n.image.at(i, 0) == 0.0);
    CHECK(n.image.at(i, 4) == 0.0);
    CHECK(n.image.at(0, i) == 0.0);
    CHECK(n.image.at(4, i) == 0.0);
  }

  std::vector<Vec2> grid(25, Vec2{3, 4});
  grid[2 * 5 + 2] = {0, 0};
  grid[1 * 5 + 2] = {1e-7, 0};
  n = normalize_iwe(iwe, FlowField::dense({5, 5}, grid), 0.5);
  CHECK(n.image.at(2, 2) == 0.0);
  CHECK(n.image.at(2, 1) == 0.0);
  CHECK(n.image.at(1, 1) == doctest::Approx(2.0 / (5 * 0.5)));
}

TEST_CASE("non-positive dt") {
  CHECK(error_code([] { normalize_iwe(Image(5, 5, 1.0), FlowField::global({1, 0}), 0.0); }) ==
        ErrorCode::NonPositiveDt);
  // all-zero IWE is fine, e.g. an empty packet
  const Niwe n = normalize_iwe(Image(5, 5, 0.0), FlowField::global({1, 0}), 0.0);
  CHECK(total(n.image) == 0.0);
  const Niwe e = build_niwe(EventPacket::from_events({}, {5, 5}), FlowField::global({1, 0}));
  CHECK(e.image == Image(5, 5));
}

TEST_CASE("build_niwe reference time and parameters") {
  const auto p = packet_of({{0.2, 3, 3, 1}, {0.6, 4, 3, 1}}, {8, 8});
  const Niwe n = build_niwe(p, FlowField::global({2.5, 0}));
  CHECK(n.t_ref == doctest::Approx(0.4));
  CHECK(n.dt == doctest::Approx(0.4));
  CHECK(n.n_events == 2);
  CHECK(n.contrast == 0.1);
  CHECK(n.sigma_px == 1.0);
  // both events warp to x = 3.5
  NiweOptions o;
  o.sigma_px = 0;
  const Niwe m = build_niwe(p, FlowField::global({2.5, 0}), o);
  CHECK(m.image.at(3, 3) == doctest::Approx(0.1 / (2.5 * 0.4)));
  CHECK(m.image.at(4, 3) == doctest::Approx(0.1 / (2.5 * 0.4)));
}

TEST_CASE("simulated events") {
  SUBCASE("rise of 0.25") {
    Image a(1, 1, 0.0), b(1, 1, 0.25);
    std::vector<Image> f{a, b};
    std::vector<double> t{0, 1};
    const auto p = simulate_events(f, t, 0.1);
    REQUIRE(p.size() == 2);
    CHECK(p.events[0].polarity == 1);
    CHECK(p.events[1].polarity == 1);
  }
  SUBCASE("ramp down to -0.35") {
    Image a(1, 1, 0.0), b(1, 1, -0.35);
    std::vector<Image> f{a, b};
    std::vector<double> t{2, 4};
    const auto p = simulate_events(f, t, 0.1);
    REQUIRE(p.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(p.events[k].polarity == -1);
      CHECK(p.events[k].t == doctest::Approx(2 + 2 * 0.1 * (k + 1) / 0.35).epsilon(1e-12));
    }
  }
  SUBCASE("reference carries over between frames") {
    std::vector<Image> f{Image(1, 1, 0.0), Image(1, 1, 0.05), Image(1, 1, 0.12), Image(1, 1, 0.0)};
    std::vector<double> t{0, 1, 2, 3};
    const auto p = simulate_events(f, t, 0.1);
    REQUIRE(p.size() == 2);
    CHECK(p.events[0].polarity == 1);
    CHECK(p.events[0].t == doctest::Approx(1 + 0.05 / 0.07));
    CHECK(p.events[1].polarity == -1);
  }
  SUBCASE("constant video") {
    std::vector<Image> f{Image(4, 4, 0.3), Image(4, 4, 0.3), Image(4, 4, 0.3)};
    std::vector<double> t{0, 1, 2};
    CHECK(simulate_events(f, t, 0.1).empty());
  }
  SUBCASE("bad timestamps") {
    std::vector<Image> f{Image(2, 2), Image(2, 2)};
    std::vector<double> t{1, 1};
    CHECK(error_code([&] { simulate_events(f, t, 0.1); }) == ErrorCode::BadTimestamps);
    std::vector<Image> one{Image(2, 2)};
    std::vector<double> t1{0};
    CHECK(error_code([&] { simulate_events(one, t1, 0.1); }) == ErrorCode::BadTimestamps);
  }
}

TEST_CASE("contrast maximization contract") {
  CHECK(error_code([] { estimate_global_flow_cmax(EventPacket::from_events({}, {8, 8}), VelocityGrid::symmetric(2, 1)); }) ==
        ErrorCode::EmptyPacket);

  const auto single = packet_of({{0.5, 4, 4, 1}}, {8, 8});
  CHECK(estimate_global_flow_cmax(single, VelocityGrid::symmetric(3, 1)).global_velocity() == Vec2{0, 0});

  const auto p = packet_of({{0.0, 2, 4, 1}, {0.1, 3, 4, 1}, {0.2, 4, 4, -1}}, {8, 8});
  CHECK(estimate_global_flow_cmax(p, VelocityGrid{}).global_velocity() == Vec2{0, 0});
}

TEST_CASE("contrast maximization on a translating square edge") {
  // blurred bright square moving at (10, 0) px/s for 0.8 s
  const SensorSize s{64, 64};
  const auto times = testkit::linspace(0.0, 0.8, 33);
  std::vector<Image> frames;
  for (double t : times) {
    Image f(s);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const double cx = 24 + 10 * t;
        const double inx = 0.5 * (std::tanh((x - (cx - 10)) / 1.2) - std::tanh((x - (cx + 10)) / 1.2));
        const double iny = 0.5 * (std::tanh((y - 20) / 1.2) - std::tanh((y - 42) / 1.2));
        f.at(x, y) = inx * iny;
      }
    frames.push_back(f);
  }
  const auto p = simulate_events(frames, times, 0.1);
  REQUIRE(p.size() > 100);
  const Vec2 u = estimate_global_flow_cmax(p, {0, 20, -5, 5, 1, 1}).global_velocity();
  CHECK(std::abs(u.x - 10) <= 1.0);
  CHECK(std::abs(u.y) <= 1.0);
}

TEST_CASE("variance peaks at the true velocity") {
  // u* = (20, 0) over 0.4 s: 8 px displacement
  const SensorSize s{64, 64};
  const Vec2 ustar{20, 0};
  const auto times = testkit::linspace(0.0, 0.4, 41);
  const std::vector<Vec2> deltas{{2, 0}, {-2, 0}, {0, 2}, {0, -2}, {2, 2}, {-2, -2}, {3, 0}, {-3, 0}};
  int holds = 0, trials = 0;
  for (int seed = 1; seed <= 5; ++seed) {
    const auto tex = testkit::random_texture(seed, 64, 64, 1.0, 4, 8);
    const auto frames = testkit::translate_frames(tex, s, ustar, times);
    const auto p = simulate_events(frames, times, 0.1);
    const double t_ref = 0.5 * (p.t_first + p.t_last);
    auto var_at = [&](Vec2 u) {
      return iwe_variance(accumulate_iwe(warp_events(p, FlowField::global(u), t_ref), s, 1.0, 1.0));
    };
    const double v0 = var_at(ustar);
    for (const Vec2& d : deltas) {
      ++trials;
      if (v0 >= var_at({ustar.x + d.x, ustar.y + d.y})) ++holds;
    }
  }
  CHECK(holds == trials);
}

TEST_CASE("normalized image approximates the brightness rate along the flow") {
  const SensorSize s{48, 48};
  const Vec2 u{0, 15};
  const auto times = testkit::linspace(0.0, 0.2, 21);
  const auto tex = testkit::random_texture(42, 48, 48, 1.0, 2, 5);
  const auto frames = testkit::translate_frames(tex, s, u, times);
  const auto p = simulate_events(frames, times, 0.1);
  const Niwe n = build_niwe(p, FlowField::global(u));
  const Vec2 uhat{0, 1};
  Image a(40, 40), b(40, 40);
  for (int y = 4; y < 44; ++y)
    for (int x = 4; x < 44; ++x) {
      const Vec2 g = tex.grad(x - u.x * n.t_ref, y - u.y * n.t_ref);
      a.at(x - 4, y - 4) = n.image.at(x, y);
      b.at(x - 4, y - 4) = -(g.x * uhat.x + g.y * uhat.y);
    }
  CHECK(pearson(a, b) > 0.9);
}

}
