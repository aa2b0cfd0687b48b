#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "codp/interval.hpp"
#include "codp/kernel.hpp"
#include "support/random_dps.hpp"

using namespace codp;
using namespace codp::testing;

namespace {

const Poset R = Poset::nonneg_real();

const BinaryOp kOps[] = {BinaryOp::series, BinaryOp::parallel, BinaryOp::union_, BinaryOp::intersection};

/// Fixed-cost DP on the reals: any f <= cap costs `cost`.
DesignProblem step(double cap, double cost, std::string name = {}) {
  return dp_from_mdpi({R, R, {{"s", scalar(cap), scalar(cost)}}, std::move(name)});
}

Relation rel_apply(BinaryOp op, const Relation& a, const Relation& b) {
  switch (op) {
    case BinaryOp::series:
      return rel_series(a, b);
    case BinaryOp::parallel:
      return rel_parallel(a, b);
    case BinaryOp::union_:
      return rel_union(a, b);
    case BinaryOp::intersection:
      return rel_intersection(a, b);
  }
  throw std::logic_error("op");
}

bool matches(const DesignProblem& dp, const Relation& rel) {
  for (const auto& f : enumerate(dp.fun_poset()))
    if (as_set(dp.query(f)) != rel.minimal_resources(f)) return false;
  return true;
}

bool same_queries_on(const DesignProblem& a, const DesignProblem& b, const std::vector<Element>& fs) {
  for (const auto& f : fs)
    if (a.query(f) != b.query(f)) return false;
  return true;
}

/// Random interval over F -> R: the optimistic end adds implementations.
struct RandomInterval {
  IntervalDP dp;
  Relation lower, upper;
};

RandomInterval random_interval(Rng& rng, const Poset& F, const Poset& Rs) {
  auto lo = random_mdpi(rng, F, Rs, 3);
  auto extra = random_mdpi(rng, F, Rs, 3);
  auto hi = lo;
  hi.impls.insert(hi.impls.end(), extra.impls.begin(), extra.impls.end());
  return {IntervalDP(dp_from_mdpi(lo), dp_from_mdpi(hi)), relation_of(lo), relation_of(hi)};
}

/// Picks `a` with probability p, otherwise `b`.
DPSampler two_point(const DesignProblem& a, const DesignProblem& b, double p) {
  return {a.fun_poset(), a.res_poset(), [a, b, p](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? a : b;
          }};
}

bool within_3sigma(std::size_t count, std::size_t n, double p) {
  const double nn = static_cast<double>(n);
  return std::abs(static_cast<double>(count) / nn - p) <= 3.0 * std::sqrt(p * (1 - p) / nn) + 1e-12;
}

}  // namespace

TEST_CASE("interval lifts: endpoints match the oracle and containment holds") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    Poset A = random_finite(rng, 4), B = random_finite(rng, 4), C = random_finite(rng, 3);
    auto x = random_interval(rng, A, B), y = random_interval(rng, A, B), z = random_interval(rng, B, C);
    for (const auto& f : enumerate(A)) REQUIRE(x.dp.contains_at(f));

    auto check = [&](BinaryOp op, const RandomInterval& a, const RandomInterval& b) {
      IntervalDP r = interval_lift(op, a.dp, b.dp);
      CHECK(matches(r.lower(), rel_apply(op, a.lower, b.lower)));
      CHECK(matches(r.upper(), rel_apply(op, a.upper, b.upper)));
      for (const auto& f : enumerate(r.fun_poset())) CHECK(r.contains_at(f));
    };
    check(BinaryOp::series, x, z);
    check(BinaryOp::union_, x, y);
    check(BinaryOp::intersection, x, y);
    if (enumerate(A).size() <= 2) check(BinaryOp::parallel, x, z);
  }
}

TEST_CASE("interval trace preserves containment") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    Poset P = random_discrete(rng, 2), Q = random_discrete(rng, 2), L = random_pointed(rng, 3);
    auto x = random_interval(rng, Poset::product({P, L}), Poset::product({Q, L}));
    IntervalDP t = interval_trace(x.dp);
    CHECK(matches(t.lower(), rel_trace(x.lower)));
    CHECK(matches(t.upper(), rel_trace(x.upper)));
    for (const auto& p : enumerate(P)) CHECK(t.contains_at(p));
  }
}

TEST_CASE("embedding is coherent with every operation") {
  auto a = step(3, 10), b = step(5, 4);
  for (BinaryOp op : kOps) {
    CAPTURE(to_string(op));
    IntervalDP r = interval_lift(op, embed_dp(a), embed_dp(b));
    DesignProblem d = apply(op, a, b);
    std::vector<Element> fs;
    for (double v : {0.0, 2.0, 3.0, 4.0, 6.0}) {
      if (op == BinaryOp::parallel)
        fs.push_back(tuple({scalar(v), scalar(v)}));
      else
        fs.push_back(scalar(v));
    }
    CHECK(same_queries_on(r.lower(), d, fs));
    CHECK(same_queries_on(r.upper(), d, fs));
  }
  IntervalDP e = embed_dp(a);
  CHECK(e.contains_at(scalar(1)));
  auto never = dp_from_mdpi({R, R, {}, ""});
  CHECK(interval_lift(BinaryOp::series, IntervalDP(never, a), embed_dp(a)).lower().query(scalar(0)).empty());
  CHECK_THROWS_AS(IntervalDP(a, dp_from_mdpi({R, Poset::nonneg_real("g"), {}, ""})), PosetMismatchError);
}

TEST_CASE("seed derivation is deterministic and spreads indices") {
  CHECK(derive_seed(7, 1) == derive_seed(7, 1));
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
}

TEST_CASE("delta samplers and pushforwards") {
  auto a = step(3, 10), b = step(5, 4);
  auto s = delta_sampler(a);
  CHECK(s.draw(1).query(scalar(2)) == s.draw(999).query(scalar(2)));
  CHECK(pushforward([](const DesignProblem& d) { return d; }, s).draw(5).query(scalar(2)) == a.query(scalar(2)));
  CHECK(pushforward([b](const DesignProblem&) { return b; }, s).draw(5).query(scalar(2)) == b.query(scalar(2)));

  for (BinaryOp op : kOps) {
    auto lifted = dist_lift_binary(op, delta_sampler(a), delta_sampler(b));
    auto det = apply(op, a, b);
    Element f = op == BinaryOp::parallel ? tuple({scalar(2), scalar(2)}) : scalar(2);
    CHECK(lifted.draw(3).query(f) == det.query(f));
    CHECK(lifted.draw(4).query(f) == det.query(f));
  }

  Estimate yes = success_probability(s, scalar(2), scalar(10), 50, 1);
  Estimate no = success_probability(s, scalar(2), scalar(9), 50, 1);
  CHECK(yes.p_hat == 1.0);
  CHECK(no.p_hat == 0.0);
}

TEST_CASE("trace pushforward equals the lifted trace draw for draw") {
  const Poset RR = Poset::product({R, R});
  auto body = [&](double k) {
    return from_monotone_map(RR, RR, [k](const Element& f) {
      if (f[0].is_top() || f[1].is_top()) return std::optional<Element>(tuple({Element::top(), Element::top()}));
      double m = f[0].as_scalar() + k * f[1].as_scalar();
      return std::optional<Element>(tuple({scalar(m), scalar(m)}));
    });
  };
  auto s = two_point(body(0.5), body(0.25), 0.5);
  auto t1 = dist_lift_trace(s);
  auto t2 = pushforward([](const DesignProblem& d) { return trace(d); }, s, R, R);
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(t1.draw(seed).query(scalar(10)) == t2.draw(seed).query(scalar(10)));
}

TEST_CASE("lifted union matches the enumerated product distribution") {
  // a-side: cost 10 (p=0.3) or 6; b-side: cost 8 (p=0.5) or 12. Union cost = min.
  auto s = dist_lift_binary(BinaryOp::union_, two_point(step(5, 10), step(5, 6), 0.3),
                            two_point(step(5, 8), step(5, 12), 0.5));
  std::map<double, double> exact;
  for (auto [ca, pa] : {std::pair{10.0, 0.3}, {6.0, 0.7}})
    for (auto [cb, pb] : {std::pair{8.0, 0.5}, {12.0, 0.5}}) exact[std::min(ca, cb)] += pa * pb;

  const std::size_t n = 10000;
  std::map<double, std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) counts[s.draw(derive_seed(2024, i)).query(scalar(1)).elements()[0].as_scalar()]++;
  for (const auto& [cost, p] : exact) {
    CAPTURE(cost);
    CHECK(within_3sigma(counts[cost], n, p));
  }
  // the event "cost <= 9 is feasible": P = 1 - P(a=10, b=12) = 0.85
  Estimate e = success_probability(s, scalar(1), scalar(9), n, 77);
  CHECK(std::abs(e.p_hat - 0.85) <= 3 * std::sqrt(0.85 * 0.15 / n));
}

TEST_CASE("success probability of a 50/50 sampler") {
  auto s = two_point(step(5, 1), step(5, 100), 0.5);
  Estimate e = success_probability(s, scalar(1), scalar(10), 10000, 5);
  CHECK(e.p_hat >= 0.485);
  CHECK(e.p_hat <= 0.515);
  CHECK(e.ci_lo < e.p_hat);
  CHECK(e.ci_hi > e.p_hat);
  CHECK(e.n == 10000);
  CHECK(e.root_seed == 5);

  auto d = condition(as_kernel(constant_family(step(5, 1), ParamSpace::finite({"only"}))), label("only"));
  Estimate one = success_probability(d, scalar(1), scalar(10), 200, 5);
  CHECK(one.p_hat == 1.0);
  CHECK(one.ci_lo > 0.9);
  CHECK(one.ci_hi <= 1.0);
}

TEST_CASE("estimates do not depend on the thread count") {
  auto s = two_point(step(5, 1), step(5, 100), 0.3);
  setenv("CODP_THREADS", "1", 1);
  Estimate one = success_probability(s, scalar(1), scalar(10), 3000, 11);
  setenv("CODP_THREADS", "4", 1);
  Estimate four = success_probability(s, scalar(1), scalar(10), 3000, 11);
  unsetenv("CODP_THREADS");
  CHECK(one.p_hat == four.p_hat);
  CHECK(one.ci_lo == four.ci_lo);
}

TEST_CASE("wilson interval reference values") {
  // 50 / 100 at z = 1.96: centre 0.5, half width 0.0962
  Estimate e = wilson_estimate(50, 100, 0);
  CHECK(e.ci_lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(e.ci_hi == doctest::Approx(0.5962).epsilon(1e-3));
  Estimate zero = wilson_estimate(0, 100, 0);
  CHECK(zero.ci_lo == 0.0);
  CHECK(zero.ci_hi == doctest::Approx(0.0370).epsilon(1e-2));
}

TEST_CASE("parameter spaces") {
  auto ab = ParamSpace::finite({"a", "b"});
  auto xyz = ParamSpace::finite({"x", "y", "z"});
  auto p = ParamSpace::product(ab, xyz);
  CHECK(p.points().size() == 6);
  CHECK(p.index_of(tuple({label("b"), label("y")})) == 4);
  auto box = ParamSpace::box({"v"}, {{0.0, 5.0}});
  CHECK(box.contains(tuple({scalar(2.5)})));
  CHECK_FALSE(box.contains(tuple({scalar(6.0)})));
  CHECK_FALSE(box.is_finite());
  CHECK_THROWS_AS(box.points(), UnsupportedError);
  CHECK_THROWS_AS(ParamSpace::finite({"a", "a"}), DomainError);
  CHECK_THROWS_AS(require_param(ab, label("c")), DomainError);
}

TEST_CASE("kernel tables: product, composition, identity, associativity") {
  auto ab = ParamSpace::finite({"a", "b"});
  auto xyz = ParamSpace::finite({"x", "y", "z"});
  auto one = ParamSpace::finite({"*"});

  Eigen::MatrixXd t1(2, 2), t2(2, 3);
  t1 << 0.2, 0.8, 0.6, 0.4;
  t2 << 0.1, 0.3, 0.6, 0.5, 0.25, 0.25;
  auto k1 = finite_kernel(ab, ab, t1);
  auto k2 = finite_kernel(ab, xyz, t2);

  auto prod = kernel_product(k1, k2);
  REQUIRE(prod.pmf);
  REQUIRE(prod.pmf->rows() == 4);
  REQUIRE(prod.pmf->cols() == 6);
  // entry ((b, a), (a, z)) = t1(b, a) * t2(a, z)
  CHECK((*prod.pmf)(2, 2) == doctest::Approx(0.6 * 0.6));
  CHECK((*prod.pmf)(3, 4) == doctest::Approx(0.4 * 0.25));

  auto sq = kernel_compose(k1, k1);
  Eigen::Matrix2d hand;
  hand << 0.2 * 0.2 + 0.8 * 0.6, 0.2 * 0.8 + 0.8 * 0.4, 0.6 * 0.2 + 0.4 * 0.6, 0.6 * 0.8 + 0.4 * 0.4;
  CHECK(sq.pmf->isApprox(hand, 1e-12));

  CHECK(kernel_compose(identity_kernel(xyz), k2).pmf->isApprox(t2));
  CHECK(kernel_compose(k2, identity_kernel(ab)).pmf->isApprox(t2));
  auto left = kernel_compose(k2, kernel_compose(k1, k1));
  auto right = kernel_compose(kernel_compose(k2, k1), k1);
  CHECK(left.pmf->isApprox(*right.pmf, 1e-12));

  CHECK_THROWS_AS(kernel_compose(k1, k2), DomainError);
  Eigen::MatrixXd bad(1, 2);
  bad << 0.5, 0.6;
  CHECK_THROWS_AS(finite_kernel(one, ab, bad), DomainError);

  auto d1 = delta_kernel(ab, xyz, [](const Element& m) { return label(m.as_label() == "a" ? "x" : "z"); });
  auto d2 = delta_kernel(xyz, ab, [](const Element& m) { return label(m.as_label() == "x" ? "b" : "a"); });
  auto dd = kernel_compose(d2, d1);
  CHECK(dd.draw(label("a"), 9) == label("b"));
  CHECK(dd.draw(label("b"), 9) == label("a"));
  CHECK((*dd.pmf)(0, 1) == 1.0);
  auto both = kernel_product(d1, d1);
  CHECK(both.draw(tuple({label("a"), label("b")}), 3) == tuple({label("x"), label("z")}));
}

TEST_CASE("kernel draws follow their tables") {
  auto one = ParamSpace::finite({"*"});
  auto coin = ParamSpace::finite({"h", "t"});
  Eigen::MatrixXd fair(1, 2);
  fair << 0.5, 0.5;
  auto k = kernel_product(finite_kernel(one, coin, fair), finite_kernel(one, coin, fair));
  const std::size_t n = 10000;
  std::map<Element, std::size_t> counts;
  const Element m = tuple({label("*"), label("*")});
  for (std::size_t i = 0; i < n; ++i) counts[k.draw(m, derive_seed(1, i))]++;
  CHECK(counts.size() == 4);
  for (const auto& [x, c] : counts) CHECK(within_3sigma(c, n, 0.25));

  // two-step chain sampled end to end against the squared table
  auto ab = ParamSpace::finite({"a", "b"});
  Eigen::MatrixXd t(2, 2);
  t << 0.2, 0.8, 0.6, 0.4;
  auto sq = kernel_compose(finite_kernel(ab, ab, t), finite_kernel(ab, ab, t));
  std::size_t to_a = 0;
  for (std::size_t i = 0; i < n; ++i) to_a += sq.draw(label("a"), derive_seed(2, i)) == label("a");
  CHECK(within_3sigma(to_a, n, (*sq.pmf)(0, 0)));
  CHECK(sq.draw(label("b"), 77) == sq.draw(label("b"), 77));
}

TEST_CASE("parameterized DPs: element-wise lifts, reparameterization") {
  auto caps = ParamSpace::finite({"lo", "hi"});
  auto costs = ParamSpace::finite({"cheap", "dear"});
  ParameterizedDP a{caps, {R, R}, [](const Element& m) { return step(m.as_label() == "lo" ? 2 : 4, 5); }};
  ParameterizedDP b{costs, {R, R}, [](const Element& m) { return step(10, m.as_label() == "cheap" ? 1 : 7); }};
  std::vector<Element> fs{scalar(0), scalar(1), scalar(3), scalar(5), scalar(6)};
  for (BinaryOp op : {BinaryOp::series, BinaryOp::union_, BinaryOp::intersection}) {
    auto lifted = param_lift(op, a, b);
    for (const auto& m : lifted.domain.points())
      CHECK(same_queries_on(lifted.build(m), apply(op, a.build(m[0]), b.build(m[1])), fs));
  }
  auto k = constant_family(step(3, 3), caps);
  auto kk = param_lift(BinaryOp::union_, k, k);
  CHECK(kk.build(tuple({label("lo"), label("hi")})).query(scalar(1)) == step(3, 3).query(scalar(1)));

  auto same = reparam(a, caps, [](const Element& m) { return m; });
  for (const auto& m : caps.points()) CHECK(same_queries_on(same.build(m), a.build(m), fs));
  auto fixed = reparam(a, costs, [](const Element&) { return label("hi"); });
  CHECK(same_queries_on(fixed.build(label("cheap")), fixed.build(label("dear")), fs));
  CHECK_THROWS_AS(a.build(label("cheap")), DomainError);
}

TEST_CASE("param_trace and kernel_trace build traces element-wise") {
  const Poset RR = Poset::product({R, R});
  auto ks = ParamSpace::finite({"k1", "k5"});
  ParameterizedDP loop{ks, {RR, RR}, [RR](const Element& m) {
                         double k = m.as_label() == "k1" ? 0.1 : 0.5;
                         return from_monotone_map(RR, RR, [k](const Element& f) {
                           if (f[0].is_top() || f[1].is_top())
                             return std::optional<Element>(tuple({Element::top(), Element::top()}));
                           double v = f[0].as_scalar() + k * f[1].as_scalar();
                           return std::optional<Element>(tuple({scalar(v), scalar(v)}));
                         });
                       }};
  auto t = param_trace(loop);
  CHECK(t.codomain.fun == R);
  CHECK(t.build(label("k5")).query(scalar(100)).elements()[0].as_scalar() == doctest::Approx(200.0));
  auto kt = kernel_trace(as_kernel(loop));
  CHECK(kt.draw(label("k1"), 3).query(scalar(90)).elements()[0].as_scalar() == doctest::Approx(100.0));
}

TEST_CASE("kernel lift and reparameterized kernels") {
  auto ab = ParamSpace::finite({"a", "b"});
  auto xy = ParamSpace::finite({"x", "y"});
  // DP kernels with finite support: the drawn DP is identified by its cost at f = 1
  Eigen::MatrixXd ta(2, 2), tb(2, 2);
  ta << 0.3, 0.7, 1.0, 0.0;
  tb << 0.5, 0.5, 0.2, 0.8;
  auto pick_a = finite_kernel(ab, xy, ta);
  auto pick_b = finite_kernel(ab, xy, tb);
  ParameterizedDP fam{xy, {R, R}, [](const Element& m) { return step(5, m.as_label() == "x" ? 10 : 6); }};
  ParameterizedDP fam2{xy, {R, R}, [](const Element& m) { return step(5, m.as_label() == "x" ? 8 : 12); }};
  DPKernel ka = reparam_kernel(as_kernel(fam), pick_a);
  DPKernel kb = reparam_kernel(as_kernel(fam2), pick_b);

  auto cost = [](const DesignProblem& d) { return d.query(scalar(1)).elements()[0].as_scalar(); };

  // reparameterized kernel: P(cost 10 | a) = ta(a, x)
  const std::size_t n = 10000;
  std::size_t tens = 0;
  for (std::size_t i = 0; i < n; ++i) tens += cost(ka.draw(label("a"), derive_seed(3, i))) == 10;
  CHECK(within_3sigma(tens, n, 0.3));
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(cost(ka.draw(label("b"), s)) == 10);

  // lifted union at (a, b): enumerate both supports
  DPKernel u = kernel_lift(BinaryOp::union_, ka, kb);
  std::map<double, double> exact;
  for (auto [ca, pa] : {std::pair{10.0, 0.3}, {6.0, 0.7}})
    for (auto [cb, pb] : {std::pair{8.0, 0.2}, {12.0, 0.8}}) exact[std::min(ca, cb)] += pa * pb;
  std::map<double, std::size_t> counts;
  const Element m = tuple({label("a"), label("b")});
  for (std::size_t i = 0; i < n; ++i) counts[cost(u.draw(m, derive_seed(4, i)))]++;
  for (const auto& [c, p] : exact) {
    CAPTURE(c);
    CHECK(within_3sigma(counts[c], n, p));
  }

  // fixing the parameters recovers the lifted samplers draw for draw
  auto ds = dist_lift_binary(BinaryOp::union_, condition(ka, label("a")), condition(kb, label("b")));
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(cost(ds.draw(s)) == cost(u.draw(m, s)));

  // delta kernels reduce to the element-wise lift
  auto pl = param_lift(BinaryOp::union_, fam, fam2);
  auto kl = kernel_lift(BinaryOp::union_, as_kernel(fam), as_kernel(fam2));
  for (const auto& p : pl.domain.points()) CHECK(cost(pl.build(p)) == cost(kl.draw(p, 1)));

  CHECK_THROWS_AS(reparam_kernel(as_kernel(fam), identity_kernel(ab)), DomainError);
}
