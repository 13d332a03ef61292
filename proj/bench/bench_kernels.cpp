// Times the loop drivers in serial and OpenMP mode. Both share the per-row
// kernels, so this is purely a scheduling comparison; outputs are checked
// bit-identical before timing.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <swincap/kernels.hpp>
#include <swincap/rng.hpp>

using namespace swincap;

namespace {

std::vector<float> random_buf(size_t n, SplitMix64& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = float(rng.next_double()) - 0.5f;
  return v;
}

template <class Fn>
double best_seconds(Fn&& fn, int reps) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, const char* dims, u64 macs, double serial_s, double parallel_s) {
  std::printf("%-18s %-16s %10.2f %10.2f %7.2fx\n", name, dims, macs / serial_s * 1e-9,
              macs / parallel_s * 1e-9, serial_s / parallel_s);
}

struct Case {
  const char* name;
  const char* dims;
  u64 macs;
  std::vector<float> out_serial, out_parallel;
  double serial_s = 0, parallel_s = 0;
};

}  // namespace

int main() {
  SplitMix64 rng(7);
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run the serial driver\n");
#endif
  std::printf("%-18s %-16s %10s %10s %8s\n", "kernel", "size", "serial", "parallel", "speedup");
  std::printf("%-18s %-16s %10s %10s %8s\n", "", "", "GMAC/s", "GMAC/s", "");

  // square matmul at two sizes
  for (i64 n : {192, 384}) {
    auto a = random_buf(size_t(n * n), rng);
    auto b = random_buf(size_t(n * n), rng);
    std::vector<float> c(size_t(n * n));
    char dims[48];
    std::snprintf(dims, sizeof dims, "%dx%dx%d", int(n), int(n), int(n));

    kernels::set_parallel(false);
    double ts = best_seconds([&] { kernels::matmul_nn(a.data(), b.data(), c.data(), n, n, n); }, 3);
    std::vector<float> ref = c;
    kernels::set_parallel(true);
    double tp = best_seconds([&] { kernels::matmul_nn(a.data(), b.data(), c.data(), n, n, n); }, 3);
    if (std::memcmp(ref.data(), c.data(), ref.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "serial and parallel matmul disagree\n");
      return 1;
    }
    report("matmul_nn", dims, u64(n) * u64(n) * u64(n), ts, tp);
  }

  // transposed variants at one size
  {
    const i64 m = 256, k = 320, n = 256;
    auto a = random_buf(size_t(m * k), rng);
    auto bt = random_buf(size_t(n * k), rng);
    std::vector<float> c(size_t(m * n));
    kernels::set_parallel(false);
    double ts = best_seconds([&] { kernels::matmul_nt(a.data(), bt.data(), c.data(), m, k, n); }, 3);
    std::vector<float> ref = c;
    kernels::set_parallel(true);
    double tp = best_seconds([&] { kernels::matmul_nt(a.data(), bt.data(), c.data(), m, k, n); }, 3);
    if (std::memcmp(ref.data(), c.data(), ref.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "serial and parallel matmul_nt disagree\n");
      return 1;
    }
    report("matmul_nt", "256x320x256", u64(m) * u64(k) * u64(n), ts, tp);

    auto am = random_buf(size_t(m * k), rng);
    auto bm = random_buf(size_t(m * n), rng);
    std::vector<float> ct(size_t(k * n));
    kernels::set_parallel(false);
    ts = best_seconds([&] { kernels::matmul_tn(am.data(), bm.data(), ct.data(), m, k, n); }, 3);
    std::vector<float> reft = ct;
    kernels::set_parallel(true);
    tp = best_seconds([&] { kernels::matmul_tn(am.data(), bm.data(), ct.data(), m, k, n); }, 3);
    if (std::memcmp(reft.data(), ct.data(), reft.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "serial and parallel matmul_tn disagree\n");
      return 1;
    }
    report("matmul_tn", "256x320x256", u64(m) * u64(k) * u64(n), ts, tp);
  }

  // grouped window mix at captioning-stage shapes
  {
    const i64 nwin = 256, s = 49, ch = 128, heads = 4;
    auto x = random_buf(size_t(nwin * s * ch), rng);
    auto w = random_buf(size_t(heads * s * s), rng);
    auto bias = random_buf(size_t(heads * s), rng);
    std::vector<float> out(size_t(nwin * s * ch));
    kernels::set_parallel(false);
    double ts = best_seconds(
        [&] { kernels::grouped_mix_fwd(x.data(), w.data(), bias.data(), out.data(), nwin, s, ch, heads); },
        3);
    std::vector<float> ref = out;
    kernels::set_parallel(true);
    double tp = best_seconds(
        [&] { kernels::grouped_mix_fwd(x.data(), w.data(), bias.data(), out.data(), nwin, s, ch, heads); },
        3);
    if (std::memcmp(ref.data(), out.data(), ref.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "serial and parallel grouped mix disagree\n");
      return 1;
    }
    report("grouped_mix_fwd", "256w 49t 128c", u64(nwin) * u64(s) * u64(s) * u64(ch), ts, tp);
  }

  kernels::set_parallel(true);
  return 0;
}
