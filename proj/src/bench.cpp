#include "cape/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <new>
#include <stdexcept>

#include "cape/attention.hpp"
#include "cape/rng.hpp"

namespace cape {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Attention working set: a handful of n x n matrices (weights, logit
// gradients) plus per-token caches; stay well under the sandbox budget.
constexpr std::uint64_t kMemoryBudgetBytes = 1ull << 31;

// Double arithmetic: the estimate must stay meaningful for lengths whose
// byte count would overflow 64-bit integers.
double working_set_bytes(Index n, Index d, Index context) {
  const auto dn = static_cast<double>(n);
  const auto dd = static_cast<double>(d);
  return 8.0 * (4.0 * dn * dn + 14.0 * dn * dd +
                (2.0 * static_cast<double>(context) + 1.0) * dd);
}

Matrix<double> random_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-1.0, 1.0);
    }
  }
  return m;
}

BenchRow time_one(PosMode mode, Index length, const BenchOptions& opt) {
  BenchRow row;
  row.mode = to_string(mode);
  row.length = length;
  row.repeats = opt.repeats;
  row.warmup = opt.warmup;
  row.threads = Eigen::nbThreads();

  if (working_set_bytes(length, opt.d_model, opt.relpos_context) > kMemoryBudgetBytes) {
    row.pass = "oom";
    row.seconds_mean = kNan;
    row.seconds_std = kNan;
    return row;
  }

  try {
    RngStream base(opt.seed);
    const AttentionParams params =
        random_attention_params(mode, opt.d_model, base.substream(0).seed());
    RelposTable table;
    if (mode == PosMode::relpos) {
      table = make_relpos_table(opt.relpos_context, opt.d_model, base.substream(1).seed());
    }
    const RelposTable* table_ptr = mode == PosMode::relpos ? &table : nullptr;
    RngStream data(base.substream(2).seed());
    const Matrix<double> tokens = random_matrix(length, opt.d_model, data);
    const Matrix<double> d_out = random_matrix(length, opt.d_model, data);

    double sink = 0.0;
    const auto run_once = [&] {
      EncodeCache cache;
      const Matrix<double> out = encode(tokens, nullptr, params, table_ptr, nullptr, &cache);
      const Matrix<double> d_tokens = encode_backward_tokens(params, table_ptr, cache, d_out);
      sink += out(0, 0) + d_tokens(0, 0);
    };

    for (int i = 0; i < opt.warmup; ++i) run_once();
    std::vector<double> samples(static_cast<std::size_t>(opt.repeats));
    for (int i = 0; i < opt.repeats; ++i) {
      const auto start = std::chrono::steady_clock::now();
      run_once();
      const auto stop = std::chrono::steady_clock::now();
      samples[static_cast<std::size_t>(i)] = std::chrono::duration<double>(stop - start).count();
    }
    if (!std::isfinite(sink)) {
      throw std::runtime_error("bench_layer: non-finite layer output");
    }

    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    row.seconds_mean = mean;
    row.seconds_std =
        samples.size() > 1 ? std::sqrt(var / static_cast<double>(samples.size() - 1)) : 0.0;
    row.pass = "forward+backward";
  } catch (const std::bad_alloc&) {
    row.pass = "oom";
    row.seconds_mean = kNan;
    row.seconds_std = kNan;
  }
  return row;
}

}  // namespace

std::vector<BenchRow> bench_layer(const BenchOptions& opt) {
  if (opt.repeats < 1) throw std::invalid_argument("bench_layer: repeats must be >= 1");
  if (opt.warmup < 0) throw std::invalid_argument("bench_layer: warmup must be >= 0");
  if (opt.d_model < 2 || opt.d_model % 2 != 0) {
    throw std::invalid_argument("bench_layer: d_model must be even and >= 2");
  }
  if (opt.relpos_context < 1) throw std::invalid_argument("bench_layer: context must be >= 1");
  if (opt.lengths.empty()) throw std::invalid_argument("bench_layer: need at least one length");
  for (Index n : opt.lengths) {
    if (n < 1) throw std::invalid_argument("bench_layer: lengths must be >= 1");
  }

  std::vector<BenchRow> rows;
  rows.reserve(2 * opt.lengths.size());
  for (PosMode mode : {PosMode::nopos, PosMode::relpos}) {
    for (Index n : opt.lengths) {
      rows.push_back(time_one(mode, n, opt));
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "mode,length,pass,seconds_mean,seconds_std,repeats,warmup,threads\n";
  char line[256];
  for (const BenchRow& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%lld,%s,%.9e,%.9e,%d,%d,%d\n", r.mode.c_str(),
                  static_cast<long long>(r.length), r.pass.c_str(), r.seconds_mean, r.seconds_std,
                  r.repeats, r.warmup, r.threads);
    out += line;
  }
  return out;
}

double slowdown_ratio(const std::vector<BenchRow>& rows, Index length) {
  const BenchRow* nopos = nullptr;
  const BenchRow* relpos = nullptr;
  for (const BenchRow& r : rows) {
    if (r.length != length) continue;
    if (r.mode == "nopos") nopos = &r;
    if (r.mode == "relpos") relpos = &r;
  }
  if (!nopos || !relpos) {
    throw std::invalid_argument("slowdown_ratio: no rows for requested length");
  }
  return relpos->seconds_mean / nopos->seconds_mean;
}

}  // namespace cape
