#include <doctest.h>

#include <cstdlib>
#include <random>

#include "lamelab/theta_kernels.hpp"

using namespace lamelab;
using namespace lamelab::kernels;

TEST_SUITE("kernels") {
  TEST_CASE("scalar and AVX2 kernels agree") {
    if (!isa_available(Isa::avx2)) {
      MESSAGE("AVX2 not available on this CPU; equivalence not exercised");
      return;
    }
#if defined(LAMELAB_HAVE_AVX2_KERNEL)
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (cplx period : {cplx{0.0, 1.0}, cplx{0.3, 1.2}, cplx{0.0, 4.0}, cplx{-0.45, 0.6}}) {
      for (double alpha : {0.5, 0.0, 1.0 / 3.0}) {
        const ThetaSeriesParams p{period, alpha, 0.5, 1e-16, 200};
        for (std::size_t n : {1u, 3u, 4u, 7u, 33u}) {
          std::vector<cplx> zs;
          for (std::size_t i = 0; i < n; ++i) zs.emplace_back(2.0 * u(rng), period.imag() * u(rng));
          const int order = static_cast<int>(n % 9);
          std::vector<cplx> a(n * (order + 1)), b(a.size());
          CHECK(theta_batch_scalar(p, zs, order, a));
          CHECK(theta_batch_avx2(p, zs, order, b));
          for (std::size_t i = 0; i < a.size(); ++i) {
            const double scale = std::max(std::abs(a[i]), 1e-300);
            CHECK(std::abs(a[i] - b[i]) <= 1e-13 * std::max(1.0, scale));
          }
        }
      }
    }
#endif
  }

  TEST_CASE("the environment can force the scalar path") {
    ::setenv("LAMELAB_SIMD", "scalar", 1);
    CHECK(detected_isa() == Isa::scalar);
    ::unsetenv("LAMELAB_SIMD");
    CHECK(theta_batch_for(Isa::scalar) == &theta_batch_scalar);
    CHECK(to_string(Isa::avx2) == "avx2");
  }
}
