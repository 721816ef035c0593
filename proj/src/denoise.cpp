#include "evrec/denoise.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>

#include "evrec/error.hpp"
#include "evrec/kernels.hpp"
#include "evrec/regularizers.hpp"

namespace evrec {

Image gaussian_denoise(const Image& image, double sigma, double gain) {
  if (!(sigma >= 0.0) || !(gain >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma and gain must be >= 0");
  const double spatial = gain * sigma;
  if (spatial == 0.0 || image.data.empty()) return image;
  const std::vector<double> kernel = kernels::gaussian_kernel_1d(spatial);
  Image out(image.size());
  kernels::omp::convolve_separable(image.data, image.size(), kernel, kernels::Border::Replicate, out.data);
  return out;
}

Image tv_denoise(const Image& image, double sigma, const TvDenoiseOptions& opts) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  const double weight = sigma * sigma;
  if (weight == 0.0 || image.data.empty()) return image;

  QuadraticData data;
  data.normal_op = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
  data.normal_rhs = image.data;
  data.energy = [&image](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - image.data[i]) * (x[i] - image.data[i]);
    return 0.5 * acc;
  };
  SplitBregmanOutput sb =
      split_bregman_tv(data, image.size(), weight, opts.gamma_per_weight * weight, opts.outer, opts.inner, image.data);
  return Image(image.width, image.height, std::move(sb.x));
}

// ---------------------------------------------------------------------------
// Bridge protocol

namespace {

constexpr char kMagic[4] = {'E', 'V', 'D', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::string encode_header(const Image& image) {
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(image.width));
  put_u32(out, static_cast<std::uint32_t>(image.height));
  return out;
}

void append_pixels(std::string& out, const Image& image) {
  out.reserve(out.size() + 4 * image.pixels());
  for (double v : image.data) put_f32(out, static_cast<float>(v));
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

using Clock = std::chrono::steady_clock;

}  // namespace

std::string encode_bridge_request(const Image& image, double sigma) {
  std::string out = encode_header(image);
  put_f32(out, static_cast<float>(sigma));
  append_pixels(out, image);
  return out;
}

std::string encode_bridge_reply(const Image& image) {
  std::string out = encode_header(image);
  append_pixels(out, image);
  return out;
}

BridgeDenoiser::BridgeDenoiser(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw Error(ErrorCode::InvalidArgument, "empty bridge command");
  spawn();
}

BridgeDenoiser::~BridgeDenoiser() { shutdown(); }

void BridgeDenoiser::spawn() {
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::ChildSpawnError, std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::ChildSpawnError, std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw Error(ErrorCode::ChildSpawnError, std::strerror(errno));
  }
  if (pid == 0) {
    // own process group, so a kill also reaches whatever the shell started
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::signal(SIGPIPE, SIG_DFL);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);
  ::fcntl(from_child_, F_SETFL, ::fcntl(from_child_, F_GETFL) | O_NONBLOCK);
}

void BridgeDenoiser::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ <= 0) return;
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) != 0) {
      ::kill(-pid_, SIGKILL);
      pid_ = -1;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(-pid_, SIGKILL);
  ::waitpid(pid_, &status, 0);
  pid_ = -1;
}

void BridgeDenoiser::fail_with_exit_status(const std::string& what) {
  // A shell that could not find or run the command exits 126/127; anything
  // else is a child that started but broke the protocol.
  int status = 0;
  pid_t done = 0;
  for (int i = 0; i < 50 && done == 0; ++i) {
    done = ::waitpid(pid_, &status, WNOHANG);
    if (done == 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (done == pid_) pid_ = -1;
  shutdown();
  if (done > 0 && WIFEXITED(status) && (WEXITSTATUS(status) == 126 || WEXITSTATUS(status) == 127)) {
    throw Error(ErrorCode::ChildSpawnError, "could not run '" + command_ + "'");
  }
  throw Error(ErrorCode::ProtocolError, what);
}

std::string BridgeDenoiser::exchange(const std::string& request, std::size_t reply_size) {
  const auto deadline = Clock::now() + timeout_;
  std::string reply;
  reply.reserve(reply_size);
  std::size_t written = 0;
  char buf[1 << 16];

  // leftovers from the previous reply
  if (::read(from_child_, buf, 1) > 0) {
    shutdown();
    throw Error(ErrorCode::ProtocolError, "bridge child sent bytes nobody asked for");
  }

  while (reply.size() < reply_size) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) {
      shutdown();
      throw Error(ErrorCode::Timeout, "bridge child did not answer within " + std::to_string(timeout_.count()) + " ms");
    }
    pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
    const nfds_t n = written < request.size() ? 2 : 1;
    const int ready = ::poll(fds, n, static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      shutdown();
      throw Error(ErrorCode::ProtocolError, std::strerror(errno));
    }
    if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::write(to_child_, request.data() + written, request.size() - written);
      if (w > 0) {
        written += static_cast<std::size_t>(w);
      } else if (w < 0 && errno != EAGAIN && errno != EINTR) {
        fail_with_exit_status("bridge child closed its input");
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t r = ::read(from_child_, buf, std::min(sizeof buf, reply_size - reply.size()));
      if (r > 0) {
        reply.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0) {
        fail_with_exit_status("bridge child closed its output after " + std::to_string(reply.size()) + " of " +
                              std::to_string(reply_size) + " bytes");
      } else if (errno != EAGAIN && errno != EINTR) {
        fail_with_exit_status(std::strerror(errno));
      }
      if (reply.size() >= 4 && std::memcmp(reply.data(), kMagic, 4) != 0) {
        shutdown();
        throw Error(ErrorCode::ProtocolError, "bad reply magic");
      }
    }
  }
  if (written < request.size()) {
    shutdown();
    throw Error(ErrorCode::ProtocolError, "bridge child replied before reading the whole request");
  }
  // Bytes beyond the announced reply are a protocol violation too.
  const ssize_t extra = ::read(from_child_, buf, 1);
  if (extra > 0) {
    shutdown();
    throw Error(ErrorCode::ProtocolError, "bridge child sent more bytes than announced");
  }
  return reply;
}

Image BridgeDenoiser::denoise(const Image& image, double sigma) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  if (pid_ < 0) spawn();
  const std::string request = encode_bridge_request(image, sigma);
  const std::size_t reply_size = 12 + 4 * image.pixels();
  const std::string reply = exchange(request, reply_size);

  if (get_u32(reply.data() + 4) != static_cast<std::uint32_t>(image.width) ||
      get_u32(reply.data() + 8) != static_cast<std::uint32_t>(image.height)) {
    shutdown();
    throw Error(ErrorCode::ProtocolError, "reply dimensions differ from the request");
  }
  Image out(image.size());
  for (std::size_t i = 0; i < out.pixels(); ++i) {
    out.data[i] = std::bit_cast<float>(get_u32(reply.data() + 12 + 4 * i));
  }
  return out;
}

std::unique_ptr<Denoiser> make_denoiser(std::string_view kind, double gaussian_gain) {
  if (kind == "identity") return std::make_unique<IdentityDenoiser>();
  if (kind == "gaussian") return std::make_unique<GaussianDenoiser>(gaussian_gain);
  if (kind == "tv") return std::make_unique<TvDenoiser>();
  constexpr std::string_view prefix = "bridge:";
  if (kind.substr(0, prefix.size()) == prefix) {
    auto timeout = BridgeDenoiser::kDefaultTimeout;
    if (const char* env = std::getenv("EVREC_BRIDGE_TIMEOUT"); env != nullptr && *env != '\0') {
      char* end = nullptr;
      const double seconds = std::strtod(env, &end);
      if (end == env || *end != '\0' || !(seconds > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "EVREC_BRIDGE_TIMEOUT must be a positive number of seconds");
      }
      timeout = std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
    }
    return std::make_unique<BridgeDenoiser>(std::string(kind.substr(prefix.size())), timeout);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown denoiser '" + std::string(kind) + "'");
}

}  // namespace evrec
