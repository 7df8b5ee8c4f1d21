#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cape/types.hpp"

namespace cape {

struct BenchOptions {
  Index d_model = 64;
  std::vector<Index> lengths;
  int repeats = 100;
  int warmup = 10;
  Index relpos_context = 100;
  std::uint64_t seed = 42;
};

struct BenchRow {
  std::string mode;
  Index length = 0;
  std::string pass;  // "forward+backward", or "oom" when the size guard trips
  double seconds_mean = 0.0;
  double seconds_std = 0.0;
  int repeats = 0;
  int warmup = 0;
  int threads = 1;
};

/// Times forward plus backward of the attention layer for each mode
/// (nopos, relpos) and length, single-threaded. `warmup` untimed runs
/// precede `repeats` timed ones. Lengths whose working set would exhaust
/// memory come back as "oom" rows with NaN timings instead of crashing.
std::vector<BenchRow> bench_layer(const BenchOptions& opt);

/// CSV with header mode,length,pass,seconds_mean,seconds_std,repeats,warmup,threads.
std::string bench_csv(const std::vector<BenchRow>& rows);

/// relpos mean / nopos mean at one length. NaN if either row is an oom row.
double slowdown_ratio(const std::vector<BenchRow>& rows, Index length);

}  // namespace cape
