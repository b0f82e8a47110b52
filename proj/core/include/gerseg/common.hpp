#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace gerseg {

// Shape and argument problems throw subclasses of std::invalid_argument so
// callers can catch the whole family or the specific kind.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed bytes on disk: bad magic, bad version, truncated payload.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Checkpoint does not match the model it is being loaded into.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Bad or unknown keys in a JSON config file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void throw_invalid(const std::string& msg);
[[noreturn]] void throw_shape(const std::string& msg);

#define GERSEG_CHECK(cond, msg) \
  do {                          \
    if (!(cond)) ::gerseg::throw_invalid(msg); \
  } while (0)

#define GERSEG_CHECK_SHAPE(cond, msg) \
  do {                                \
    if (!(cond)) ::gerseg::throw_shape(msg); \
  } while (0)

// Worker-thread cap from the GER_THREADS environment variable. Defaults to 1.
// Results must not depend on the value; parallel loops write into
// preallocated slots and any reduction happens serially in index order.
int worker_threads();

// Runs fn(i) for i in [0, n). Uses up to worker_threads() threads; with one
// thread it degenerates to a plain loop. fn must only touch state owned by
// index i.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace gerseg
