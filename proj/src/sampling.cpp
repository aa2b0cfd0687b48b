#include "codp/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace codp {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CODP_THREADS")) {
    try {
      long requested = std::stol(env);
      if (requested >= 1) n = static_cast<unsigned>(std::min(requested, 256L));
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(worker_threads(), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t parallel_count(std::size_t n, const std::function<bool(std::size_t)>& pred) {
  std::atomic<std::size_t> hits{0};
  parallel_for(n, [&](std::size_t i) {
    if (pred(i)) hits.fetch_add(1, std::memory_order_relaxed);
  });
  return hits.load();
}

DPSampler delta_sampler(const DesignProblem& dp) {
  return {dp.fun_poset(), dp.res_poset(), [dp](std::uint64_t) { return dp; }};
}

DPSampler pushforward(std::function<DesignProblem(const DesignProblem&)> f, const DPSampler& s, Poset fun,
                      Poset res) {
  return {std::move(fun), std::move(res), [f = std::move(f), draw = s.draw](std::uint64_t seed) {
            return f(draw(seed));
          }};
}

DPSampler pushforward(std::function<DesignProblem(const DesignProblem&)> f, const DPSampler& s) {
  return pushforward(std::move(f), s, s.fun, s.res);
}

DPSampler dist_lift_binary(BinaryOp op, const DPSampler& p, const DPSampler& q) {
  // build once on placeholder DPs to validate posets and learn the result shape
  auto probe = [](const DPSampler& s) {
    return DesignProblem(s.fun, s.res, [res = s.res](const Element&) { return QueryResult(res); });
  };
  DesignProblem shape = apply(op, probe(p), probe(q));
  return {shape.fun_poset(), shape.res_poset(), [op, pd = p.draw, qd = q.draw](std::uint64_t seed) {
            return apply(op, pd(derive_seed(seed, 1)), qd(derive_seed(seed, 2)));
          }};
}

DPSampler dist_lift_trace(const DPSampler& p, TraceOptions opts) {
  auto probe = DesignProblem(p.fun, p.res, [res = p.res](const Element&) { return QueryResult(res); });
  DesignProblem shape = trace(probe, opts);
  return pushforward([opts](const DesignProblem& d) { return trace(d, opts); }, p, shape.fun_poset(),
                     shape.res_poset());
}

Estimate wilson_estimate(std::size_t successes, std::size_t n, std::uint64_t root_seed, double z) {
  Estimate e;
  e.n = n;
  e.root_seed = root_seed;
  if (n == 0) {
    e.ci_hi = 1.0;
    return e;
  }
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  e.p_hat = p;
  e.ci_lo = std::max(0.0, centre - half);
  e.ci_hi = std::min(1.0, centre + half);
  return e;
}

Estimate success_probability(const DPSampler& s, const Element& f, const Element& r, std::size_t n,
                             std::uint64_t root_seed) {
  if (n == 0) throw DomainError("success_probability: n must be positive");
  require_member(s.fun, f, "functionality");
  require_member(s.res, r, "resource");
  std::size_t hits = parallel_count(n, [&](std::size_t i) { return feasible(s.draw(derive_seed(root_seed, i)), f, r); });
  return wilson_estimate(hits, n, root_seed);
}

}  // namespace codp
