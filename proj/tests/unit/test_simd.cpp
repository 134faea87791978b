#include <cmath>
#include <vector>

#include "doctest.h"
#include "rpl/rng.hpp"
#include "rpl/simd.hpp"

namespace {

std::vector<double> random_vector(rpl::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

// Odd sizes exercise the vector tails.
const std::size_t kSizes[] = {0, 1, 3, 4, 7, 8, 15, 17, 33, 256, 257};

void check_table(const rpl::simd::KernelTable& fast) {
  const rpl::simd::KernelTable& ref = rpl::simd::scalar_kernels();
  rpl::Rng rng(42);
  for (std::size_t n : kSizes) {
    CAPTURE(n);
    const std::vector<double> a = random_vector(rng, n);
    const std::vector<double> b = random_vector(rng, n);
    CHECK(fast.dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));

    std::vector<double> y1 = b;
    std::vector<double> y2 = b;
    fast.axpy(0.37, a.data(), y1.data(), n);
    ref.axpy(0.37, a.data(), y2.data(), n);
    check_close(y1, y2);

    for (std::size_t rows : {std::size_t{1}, std::size_t{5}}) {
      const std::vector<double> m = random_vector(rng, rows * n);
      std::vector<double> out1(rows), out2(rows);
      fast.gemv(m.data(), rows, n, a.data(), out1.data());
      ref.gemv(m.data(), rows, n, a.data(), out2.data());
      check_close(out1, out2);

      const std::vector<double> x = random_vector(rng, rows);
      std::vector<double> acc1 = b;
      std::vector<double> acc2 = b;
      fast.gemv_t_acc(m.data(), rows, n, x.data(), acc1.data());
      ref.gemv_t_acc(m.data(), rows, n, x.data(), acc2.data());
      check_close(acc1, acc2);

      std::vector<double> g1 = m;
      std::vector<double> g2 = m;
      fast.ger(-0.5, x.data(), rows, a.data(), n, g1.data());
      ref.ger(-0.5, x.data(), rows, a.data(), n, g2.data());
      check_close(g1, g2);
    }
  }
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const rpl::simd::KernelTable& ref = rpl::simd::scalar_kernels();
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{4, -5, 6};
  CHECK(ref.dot(a.data(), b.data(), 3) == 12.0);

  std::vector<double> y{1, 1, 1};
  ref.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});

  const std::vector<double> m{1, 2, 3, 4, 5, 6};  // 2 x 3
  std::vector<double> out(2);
  ref.gemv(m.data(), 2, 3, a.data(), out.data());
  CHECK(out == std::vector<double>{14, 32});

  std::vector<double> acc{0, 0, 0};
  const std::vector<double> x{1, -1};
  ref.gemv_t_acc(m.data(), 2, 3, x.data(), acc.data());
  CHECK(acc == std::vector<double>{-3, -3, -3});

  std::vector<double> g(6, 0.0);
  ref.ger(1.0, x.data(), 2, a.data(), 3, g.data());
  CHECK(g == std::vector<double>{1, 2, 3, -1, -2, -3});
}

TEST_CASE("avx2 kernels agree with scalar") {
  const rpl::simd::KernelTable* avx2 = rpl::simd::avx2_kernels();
  if (avx2 == nullptr) {
    MESSAGE("avx2 kernels unavailable on this machine");
    return;
  }
  check_table(*avx2);
}

TEST_CASE("neon kernels agree with scalar") {
  const rpl::simd::KernelTable* neon = rpl::simd::neon_kernels();
  if (neon == nullptr) {
    MESSAGE("neon kernels unavailable on this machine");
    return;
  }
  check_table(*neon);
}

TEST_CASE("active table is one of the known tables") {
  const rpl::simd::KernelTable& active = rpl::simd::active();
  const bool known = &active == &rpl::simd::scalar_kernels() || &active == rpl::simd::avx2_kernels() ||
                     &active == rpl::simd::neon_kernels();
  CHECK(known);
}
