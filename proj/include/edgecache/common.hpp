#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgecache {

using FileId = std::uint32_t;
using UserId = std::uint32_t;
using Rng = std::mt19937_64;

enum class ErrorKind {
  kInvalidArgument,
  kInvalidDimension,
  kInsufficientCandidates,
  kEmptyWindow,
  kWindowTooShort,
  kNonFiniteLoss,
  kShapeMismatch,
  kConfig,
  kIo,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<UserId> user = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  // Set when the failure is attributable to one user's local computation.
  std::optional<UserId> user() const noexcept { return user_; }

 private:
  ErrorKind kind_;
  std::optional<UserId> user_;
};

// splitmix64 finalizer; derives independent stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return Rng{mix_seed(seed, tags)};
}

// Stream tags used when splitting the master seed.
namespace stream {
inline constexpr std::uint64_t kCatalog = 1;
inline constexpr std::uint64_t kProfiles = 2;
inline constexpr std::uint64_t kTrace = 3;
inline constexpr std::uint64_t kModelInit = 4;
inline constexpr std::uint64_t kShuffle = 5;
inline constexpr std::uint64_t kOracleValidation = 6;
inline constexpr std::uint64_t kOracleTest = 7;
}  // namespace stream

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_{rows}, cols_{cols}, data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Half-open range of mini-slot indices [begin, end).
struct SlotRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
  bool empty() const noexcept { return end <= begin; }
  bool operator==(const SlotRange&) const = default;
};

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace edgecache
