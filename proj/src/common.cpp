#include "edgecache/common.hpp"

namespace edgecache {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kInvalidDimension:
      return "invalid-dimension";
    case ErrorKind::kInsufficientCandidates:
      return "insufficient-candidates";
    case ErrorKind::kEmptyWindow:
      return "empty-window";
    case ErrorKind::kWindowTooShort:
      return "window-too-short";
    case ErrorKind::kNonFiniteLoss:
      return "non-finite-loss";
    case ErrorKind::kShapeMismatch:
      return "shape-mismatch";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<UserId> user)
    : std::runtime_error{message}, kind_{kind}, user_{user} {}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t state = splitmix64(seed);
  for (const auto tag : tags) {
    state = splitmix64(state ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
  }
  return state;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace edgecache
