#pragma once

#include <cstdint>
#include <functional>

#include "codp/design_problem.hpp"

namespace codp {

/// Child seed for stream `index` under `root`: splitmix64 applied to
/// root + golden_gamma * (index + 1). Binary lifts draw their left operand
/// from index 1 and the right from index 2; Monte Carlo draw i uses index i.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Number of worker threads: the CODP_THREADS environment variable when set
/// (1..256), otherwise hardware concurrency.
unsigned worker_threads();

/// Counts i in [0, n) with pred(i). Runs on worker threads; the result does
/// not depend on scheduling.
std::size_t parallel_count(std::size_t n, const std::function<bool(std::size_t)>& pred);

/// Calls fn(i) for every i in [0, n) on worker threads. fn must only write to
/// per-index storage.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// A distribution over design problems F -> R, represented by seeded draws.
struct DPSampler {
  Poset fun;
  Poset res;
  std::function<DesignProblem(std::uint64_t)> draw;
};

DPSampler delta_sampler(const DesignProblem& dp);

/// Applies a deterministic DP -> DP map to every draw. `fun`/`res` are the posets of the image.
DPSampler pushforward(std::function<DesignProblem(const DesignProblem&)> f, const DPSampler& s, Poset fun,
                      Poset res);
/// Same, for maps that keep F and R.
DPSampler pushforward(std::function<DesignProblem(const DesignProblem&)> f, const DPSampler& s);

/// Independent product followed by the operation; operands use derive_seed(seed, 1) and (seed, 2).
DPSampler dist_lift_binary(BinaryOp op, const DPSampler& p, const DPSampler& q);
DPSampler dist_lift_trace(const DPSampler& p, TraceOptions opts = {});

/// Monte Carlo estimate of a probability with a 95% Wilson interval.
struct Estimate {
  double p_hat = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  std::size_t n = 0;
  std::uint64_t root_seed = 0;
};

Estimate wilson_estimate(std::size_t successes, std::size_t n, std::uint64_t root_seed, double z = 1.959964);

/// Fraction of n draws (seeds derive_seed(root_seed, i)) in which (f, r) is feasible.
Estimate success_probability(const DPSampler& s, const Element& f, const Element& r, std::size_t n,
                             std::uint64_t root_seed);

}  // namespace codp
