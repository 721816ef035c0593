// Reference child for the denoiser bridge: answers every request with the
// input pixels unchanged. The fault flags exist to exercise error handling.
//
//   --truncate   reply with one pixel missing, then exit
//   --bad-magic  reply with a wrong magic
//   --hang       read the request, then never answer
//   --extra      append one stray byte to every reply
//   --fail       exit 1 without replying

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(void* dst, std::size_t n) {
  auto* p = static_cast<char*>(dst);
  while (n > 0) {
    const ssize_t r = ::read(STDIN_FILENO, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

bool write_exact(const void* src, std::size_t n) {
  const auto* p = static_cast<const char*>(src);
  while (n > 0) {
    const ssize_t w = ::write(STDOUT_FILENO, p, n);
    if (w <= 0) return false;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

int main(int argc, char** argv) {
  bool truncate = false, bad_magic = false, hang = false, extra = false, fail = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--truncate") truncate = true;
    else if (a == "--bad-magic") bad_magic = true;
    else if (a == "--hang") hang = true;
    else if (a == "--extra") extra = true;
    else if (a == "--fail") fail = true;
    else {
      std::fprintf(stderr, "echo_denoiser: unknown flag %s\n", argv[i]);
      return 2;
    }
  }
  if (fail) return 1;

  unsigned char header[16];
  while (read_exact(header, sizeof header)) {
    if (std::memcmp(header, "EVDN", 4) != 0) {
      std::fprintf(stderr, "echo_denoiser: bad request magic\n");
      return 1;
    }
    const std::uint64_t n = static_cast<std::uint64_t>(le32(header + 4)) * le32(header + 8);
    std::vector<unsigned char> pixels(4 * n);
    if (!read_exact(pixels.data(), pixels.size())) return 1;
    if (hang) {
      for (;;) ::pause();
    }

    unsigned char reply_header[12];
    std::memcpy(reply_header, bad_magic ? "NDVE" : "EVDN", 4);
    std::memcpy(reply_header + 4, header + 4, 8);
    std::size_t body = pixels.size();
    if (truncate && body >= 4) body -= 4;
    // one write per reply, stray byte included
    std::vector<unsigned char> reply(reply_header, reply_header + sizeof reply_header);
    reply.insert(reply.end(), pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(body));
    if (extra) reply.push_back('x');
    if (!write_exact(reply.data(), reply.size())) return 1;
    if (truncate) return 0;
  }
  return 0;
}
