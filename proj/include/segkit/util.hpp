#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace segkit {

// All randomized components draw from this engine. Its output sequence is
// fixed by the standard, unlike the std distributions, so the helpers below
// are used instead of std::uniform_int_distribution / std::shuffle.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; derives independent stream seeds from (seed, keys...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Uniform real in [0, 1) with 53 random bits.
double uniform_real(Rng& rng);

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

unsigned default_threads();

// Runs body(i) for i in [0, n) over `threads` workers in contiguous chunks.
// Callers write results into per-index slots, so output never depends on
// scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(threads, n);
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
}

// Splits a UTF-8 string into code points; throws IoError on invalid UTF-8.
std::vector<std::string> split_code_points(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// 64-bit FNV-1a, hex encoded. Used to fingerprint input files in reports.
std::string fnv1a_hex(std::string_view bytes);
std::string file_fingerprint(const std::string& path);

std::string read_file(const std::string& path);

namespace log {

enum class Level { Debug = 0, Info = 1, Warning = 2, Error = 3, Silent = 4 };

void set_level(Level level);
Level level();
void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);

}  // namespace log

}  // namespace segkit
