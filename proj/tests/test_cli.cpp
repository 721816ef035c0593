#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evrec/event_io.hpp"
#include "evrec/metrics.hpp"
#include "testkit.hpp"

using namespace evrec;
namespace fs = std::filesystem;

namespace {

const std::string kCli = EVREC_CLI_PATH;
const fs::path kData = EVREC_TEST_DATA;

struct Run {
  int status = -1;
  std::string output;  // stdout and stderr
};

Run run(const std::string& args) {
  Run r;
  FILE* pipe = ::popen((kCli + " " + args + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("evrec_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return read_pgm(in);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kEvents = "--events " + (kData / "events.txt").string();
const std::string kFixture = "--width 64 --height 64 " + kEvents + " --flow " + (kData / "flow.txt").string();

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  const Run none = run("");
  CHECK(none.status == 1);
  const Run missing = run("reconstruct --flow x.txt");
  CHECK(missing.status == 1);
  CHECK(missing.output.find("--events") != std::string::npos);
  CHECK(run("reconstruct " + kFixture + " --method magic").status == 1);
  CHECK(run("--help").status == 0);
}

TEST_CASE("i/o errors exit with 2") {
  TempDir tmp;
  const Run r = run("reconstruct --events /nonexistent/events.txt --flow /nonexistent/flow.txt --out " + tmp / "o.pgm");
  CHECK(r.status == 2);
  CHECK(r.output.find("error:") != std::string::npos);
  CHECK(run("metrics --pred /nonexistent.pgm --gt /nonexistent.pgm").status == 2);
  // events outside the declared sensor
  CHECK(run("reconstruct --width 16 --height 16 " + kEvents + " --flow " + (kData / "flow.txt").string() + " --out " +
            tmp / "o.pgm")
            .status == 2);
}

TEST_CASE("metrics of an image against itself") {
  const std::string truth = (kData / "truth.pgm").string();
  const Run r = run("metrics --pred " + truth + " --gt " + truth);
  CHECK(r.status == 0);
  CHECK(r.output == "ssim=1.0 mse=0.0\n");
}

TEST_CASE("golden reconstruction") {
  TempDir tmp;
  const Run r = run("reconstruct " + kFixture + " --method tikhonov --bit-depth 16 --out " + tmp / "out.pgm" +
                    " --trace " + tmp / "trace.csv");
  REQUIRE(r.status == 0);
  CHECK(r.output.find("solver: iterations=") != std::string::npos);
  const Image got = load_pgm(tmp / "out.pgm");
  const Image want = load_pgm((kData / "reference.pgm").string());
  CHECK(mse(got, want) < 1e-6);

  const std::string trace = slurp(tmp / "trace.csv");
  CHECK(trace.rfind("# evrec trace\n", 0) == 0);
  CHECK(trace.find("# method=tikhonov") != std::string::npos);
  CHECK(trace.find("# input.events=") != std::string::npos);
  CHECK(trace.find("# input.flow=") != std::string::npos);
  CHECK(trace.find("sha256=") != std::string::npos);
  CHECK(trace.find("iteration,data,prior,total,gap\n") != std::string::npos);

  // the reconstruction resembles the scene
  const Run m = run("metrics --align --pred " + tmp / "out.pgm" + " --gt " + (kData / "truth.pgm").string());
  CHECK(m.status == 0);
  double ssim = 0;
  REQUIRE(std::sscanf(m.output.c_str(), "ssim=%lf", &ssim) == 1);
  CHECK(ssim > 0.5);
}

TEST_CASE("tv and pnp run from the command line") {
  TempDir tmp;
  CHECK(run("reconstruct " + kFixture + " --method tv --out " + tmp / "tv.pgm").status == 0);
  CHECK(run("reconstruct " + kFixture + " --method pnp --denoiser gaussian --out " + tmp / "pnp.pgm").status == 0);
  CHECK(load_pgm(tmp / "tv.pgm").size() == SensorSize{64, 64});
  const Run bad = run("reconstruct " + kFixture + " --method pnp --denoiser bridge:" + std::string(EVREC_ECHO_PATH) +
                      "\\ --fail --out " + tmp / "x.pgm");
  CHECK(bad.status == 3);
}

TEST_CASE("flow-cmax, superres, color, clusters") {
  TempDir tmp;
  const std::string events = (kData / "events.txt").string();
  const Run c = run("flow-cmax --width 64 --height 64 --events " + events + " --range 30 --step 2 --out " +
                    tmp / "est.txt");
  CHECK(c.status == 0);
  CHECK(c.output.rfind("ux=", 0) == 0);
  CHECK(fs::exists(tmp / "est.txt"));

  CHECK(run("superres " + kFixture + " --scale 2 --out " + tmp / "sr.pgm").status == 0);
  CHECK(load_pgm(tmp / "sr.pgm").size() == SensorSize{128, 128});

  CHECK(run("color " + kFixture + " --bayer GRBG --out " + tmp / "c.ppm").status == 0);
  CHECK(fs::exists(tmp / "c.ppm"));
  CHECK(fs::exists(tmp / "c_g.pgm"));

  // two clusters: left and right half of the sensor
  std::ifstream ev(events);
  const EventPacket packet = parse_events(ev, {64, 64});
  {
    std::ofstream labels(tmp / "labels.txt");
    for (const Event& e : packet.events) labels << (e.x < 32 ? 0 : 1) << '\n';
  }
  const std::string flow = (kData / "flow.txt").string();
  CHECK(run("clusters --width 64 --height 64 " + kEvents + " --labels " + tmp / "labels.txt" + " --flows " + flow + "," + flow + " --out " +
            tmp / "cl.pgm")
            .status == 0);
  CHECK(fs::exists(tmp / "cl_0.pgm"));
  CHECK(fs::exists(tmp / "cl_1.pgm"));
  CHECK(run("clusters --width 64 --height 64 " + kEvents + " --labels " + tmp / "labels.txt" + " --flows " + flow + " --out " +
            tmp / "cl.pgm")
            .status == 2);
}

TEST_CASE("simulate, corrupt-flow, poisson") {
  TempDir tmp;
  fs::create_directories(tmp.path / "video");
  const auto tex = testkit::random_texture(3, 32, 24);
  const auto times = testkit::linspace(0.0, 0.05, 6);
  const auto frames = testkit::translate_frames(tex, {32, 24}, {20, 0}, times);
  {
    std::ofstream ts(tmp.path / "video" / "timestamps.txt");
    for (std::size_t k = 0; k < frames.size(); ++k) {
      std::ofstream f(tmp.path / "video" / ("f" + std::to_string(k) + ".pgm"), std::ios::binary);
      write_pgm(map_range(frames[k], -2.0, 2.0), f, 16);
      ts << times[k] << '\n';
    }
  }
  const Run s = run("simulate --video " + (tmp.path / "video").string() + " --out " + tmp / "ev.txt");
  CHECK(s.status == 0);
  std::ifstream ev(tmp / "ev.txt");
  CHECK(parse_events(ev, {32, 24}).size() > 0);

  CHECK(run("corrupt-flow --width 64 --height 64 --flow " + (kData / "flow.txt").string() + " --b 3 --seed 4 --out " +
            tmp / "noisy.bin")
            .status == 0);
  std::ifstream nf(tmp / "noisy.bin", std::ios::binary);
  CHECK(!parse_flow(nf, {64, 64}).is_global());
  CHECK(run("corrupt-flow --flow " + (kData / "flow.txt").string() + " --out " + tmp / "n.bin").status == 1);

  const auto inst = testkit::poisson_noise_instance(2);
  {
    std::ofstream c(tmp / "lap.bin", std::ios::binary);
    write_float_image(inst.c, c);
  }
  for (const char* method : {"direct", "pnp"}) {
    const Run p = run(std::string("poisson --method ") + method + " --boundary neumann --laplacian " + tmp / "lap.bin" +
                      " --out " + tmp / "p.pgm" + " --trace " + tmp / "p.csv");
    CHECK(p.status == 0);
    CHECK(load_pgm(tmp / "p.pgm").size() == SensorSize{64, 64});
    CHECK(slurp(tmp / "p.csv").find("# boundary=neumann") != std::string::npos);
  }
}

}
