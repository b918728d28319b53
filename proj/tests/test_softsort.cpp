#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mcs/softsort.hpp"
#include "test_helpers.hpp"

using namespace mcs;
using mcs::test::uniform;

namespace {

std::vector<double> hard_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x < v[i]; }));
  }
  return r;
}

std::vector<double> random_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

}  // namespace

TEST_CASE("small epsilon recovers hard ranks") {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> v = random_values(rng, 1 + rng() % 20, -5, 5);
    const std::vector<double> r = soft_rank(v, 1e-6);
    const std::vector<double> h = hard_ranks(v);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(r[i] == doctest::Approx(h[i]).epsilon(1e-9));
  }
  const std::vector<double> r = soft_rank(std::vector<double>{3.0, 1.0, 2.0}, 1e-3);
  CHECK(r == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("ties share their average rank") {
  const std::vector<double> r = soft_rank(std::vector<double>{1.0, 5.0, 1.0, 0.0}, 1e-4);
  CHECK(r[0] == doctest::Approx(2.5));
  CHECK(r[2] == doctest::Approx(2.5));
  CHECK(r[1] == doctest::Approx(4.0));
  CHECK(r[3] == doctest::Approx(1.0));
}

TEST_CASE("large epsilon collapses to the mean rank") {
  const std::vector<double> r = soft_rank(std::vector<double>{0.3, -0.1, 0.2, 0.0}, 1e6);
  for (double x : r) CHECK(x == doctest::Approx(2.5).epsilon(1e-5));
}

TEST_CASE("soft ranks sum to n(n+1)/2, are permutation-equivariant and shift-invariant") {
  Rng rng(4);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng() % 25;
    const double eps = uniform(rng, 0.01, 3.0);
    const std::vector<double> v = random_values(rng, n, -2, 2);
    const std::vector<double> r = soft_rank(v, eps);
    const double sum = std::accumulate(r.begin(), r.end(), 0.0);
    CHECK(sum == doctest::Approx(static_cast<double>(n * (n + 1)) / 2.0).epsilon(1e-12));

    const std::vector<std::size_t> perm = random_permutation(n, rng);
    std::vector<double> pv(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = v[perm[i]];
    const std::vector<double> pr = soft_rank(pv, eps);
    for (std::size_t i = 0; i < n; ++i) CHECK(pr[i] == doctest::Approx(r[perm[i]]).epsilon(1e-10));

    std::vector<double> shifted(v);
    for (double& x : shifted) x += 3.25;
    const std::vector<double> sr = soft_rank(shifted, eps);
    for (std::size_t i = 0; i < n; ++i) CHECK(sr[i] == doctest::Approx(r[i]).epsilon(1e-9));

    // order preserving
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (v[i] < v[j]) CHECK(r[i] <= r[j] + 1e-12);
      }
    }
  }
}

TEST_CASE("soft ranks lie in the permutahedron") {
  // Every k smallest soft ranks sum to at least k(k+1)/2.
  Rng rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng() % 15;
    std::vector<double> r = soft_rank(random_values(rng, n, -1, 1), uniform(rng, 0.05, 2.0));
    std::sort(r.begin(), r.end());
    double partial = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      partial += r[k - 1];
      CHECK(partial >= static_cast<double>(k * (k + 1)) / 2.0 - 1e-9);
    }
  }
}

TEST_CASE("vjp matches central differences") {
  Rng rng(10);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng() % 12;
    const double eps = uniform(rng, 0.05, 1.0);
    const std::vector<double> v = random_values(rng, n, -1, 1);
    const std::vector<double> u = random_values(rng, n, -1, 1);
    const std::vector<double> g = soft_rank_vjp(v, eps, u);
    const double h = 1e-7;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> up(v), down(v);
      up[i] += h;
      down[i] -= h;
      const std::vector<double> ru = soft_rank(up, eps);
      const std::vector<double> rd = soft_rank(down, eps);
      double fd = 0.0;
      for (std::size_t k = 0; k < n; ++k) fd += u[k] * (ru[k] - rd[k]) / (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("row_gradient is the Jacobian row") {
  Rng rng(13);
  const std::vector<double> v = random_values(rng, 8, -0.3, 0.3);
  const SoftRank sr(v, 0.2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::vector<double> e(v.size(), 0.0);
    e[i] = 1.0;
    const std::vector<double> via_vjp = sr.vjp(e);
    const std::vector<double> row = sr.row_gradient(i);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(row[k] == doctest::Approx(via_vjp[k]));
  }
}

TEST_CASE("soft rank input validation") {
  CHECK_THROWS_AS(soft_rank(std::vector<double>{}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(soft_rank(std::vector<double>{1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_rank(std::vector<double>{NAN}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(soft_rank_vjp(std::vector<double>{1.0, 2.0}, 0.1, std::vector<double>{1.0}), std::invalid_argument);
  CHECK(soft_rank(std::vector<double>{42.0}, 0.1) == std::vector<double>{1.0});
}
