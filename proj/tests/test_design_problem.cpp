#include <doctest.h>

#include <cmath>

#include "codp/design_problem.hpp"
#include "support/random_dps.hpp"

using namespace codp;
using namespace codp::testing;

namespace {

const Poset R = Poset::nonneg_real();

bool matches(const DesignProblem& dp, const Relation& rel) {
  for (const auto& f : enumerate(dp.fun_poset()))
    if (as_set(dp.query(f)) != rel.minimal_resources(f)) return false;
  return true;
}

bool same_queries(const DesignProblem& a, const DesignProblem& b) {
  for (const auto& f : enumerate(a.fun_poset()))
    if (a.query(f) != b.query(f)) return false;
  return true;
}

}  // namespace

TEST_CASE("mdpi query against the enumerated relation") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    Poset F = random_finite(rng, 6), Rs = random_finite(rng, 6);
    auto m = random_mdpi(rng, F, Rs);
    CHECK(matches(dp_from_mdpi(m), relation_of(m)));
  }
}

TEST_CASE("series, parallel, union and intersection against brute force") {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    Poset A = random_finite(rng, 6), B = random_finite(rng, 6), C = random_finite(rng, 6);
    auto m1 = random_mdpi(rng, A, B), m2 = random_mdpi(rng, B, C);
    auto m3 = random_mdpi(rng, A, B), m4 = random_mdpi(rng, C, A);
    auto d1 = dp_from_mdpi(m1), d2 = dp_from_mdpi(m2), d3 = dp_from_mdpi(m3), d4 = dp_from_mdpi(m4);
    auto r1 = relation_of(m1), r2 = relation_of(m2), r3 = relation_of(m3), r4 = relation_of(m4);

    CHECK(matches(series(d1, d2), rel_series(r1, r2)));
    CHECK(matches(union_of(d1, d3), rel_union(r1, r3)));
    CHECK(matches(intersection_of(d1, d3), rel_intersection(r1, r3)));
    if (enumerate(A).size() * enumerate(C).size() <= 12)
      CHECK(matches(parallel(d1, d4), rel_parallel(r1, r4)));
  }
}

TEST_CASE("trace against brute force") {
  Rng rng(23);
  int nontrivial = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Poset P = random_discrete(rng, 2), Q = random_discrete(rng, 3), L = random_pointed(rng, 4);
    Poset F = Poset::product({P, L}), Rs = Poset::product({Q, L});
    auto m = random_mdpi(rng, F, Rs, 6);
    auto dp = trace(dp_from_mdpi(m));
    CHECK(matches(dp, rel_trace(relation_of(m))));
    for (const auto& p : enumerate(P)) nontrivial += !dp.query(p).empty();
  }
  CHECK(nontrivial > 50);
}

TEST_CASE("operations preserve monotonicity") {
  Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    Poset A = random_finite(rng, 6), B = random_finite(rng, 6);
    auto a = dp_from_mdpi(random_mdpi(rng, A, B)), b = dp_from_mdpi(random_mdpi(rng, A, B));
    auto c = dp_from_mdpi(random_mdpi(rng, B, B));
    for (const auto& dp : {series(a, c), union_of(a, b), intersection_of(a, b)}) {
      auto fs = enumerate(A);
      for (const auto& f1 : fs)
        for (const auto& f2 : fs)
          if (leq(A, f1, f2)) CHECK(upper_subset(dp.query(f2), dp.query(f1)));
    }
  }
}

TEST_CASE("algebraic laws") {
  Rng rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    Poset A = random_finite(rng, 5), B = random_finite(rng, 5);
    auto a = dp_from_mdpi(random_mdpi(rng, A, B)), b = dp_from_mdpi(random_mdpi(rng, A, B));
    auto c = dp_from_mdpi(random_mdpi(rng, A, B));
    auto x = dp_from_mdpi(random_mdpi(rng, B, B)), y = dp_from_mdpi(random_mdpi(rng, B, A));

    CHECK(same_queries(series(series(a, x), y), series(a, series(x, y))));
    CHECK(same_queries(union_of(a, b), union_of(b, a)));
    CHECK(same_queries(intersection_of(a, b), intersection_of(b, a)));
    CHECK(same_queries(union_of(union_of(a, b), c), union_of(a, union_of(b, c))));
    CHECK(same_queries(intersection_of(intersection_of(a, b), c), intersection_of(a, intersection_of(b, c))));
    CHECK(same_queries(union_of(a, a), a));
    CHECK(same_queries(intersection_of(a, a), a));
  }
}

TEST_CASE("linear mass loop converges to the closed form") {
  const Poset unit = Poset::product({});
  for (double k : {0.1, 0.5, 0.9}) {
    CAPTURE(k);
    auto body = from_monotone_map(Poset::product({unit, R}), Poset::product({R, R}), [k](const Element& f) {
      const Element& m = f[1];
      if (m.is_top()) return std::optional<Element>(tuple({Element::top(), Element::top()}));
      double next = 100.0 + k * m.as_scalar();
      return std::optional<Element>(tuple({scalar(next), scalar(next)}));
    });
    auto loop = trace(body);
    auto ac = loop.query(Element::unit());
    REQUIRE(ac.size() == 1);
    const double expected = 100.0 / (1.0 - k);
    CHECK(std::abs(ac.elements()[0].as_scalar() - expected) <= 1e-6 * expected);
  }
}

TEST_CASE("linear mass loop diverges for gain >= 1") {
  const Poset unit = Poset::product({});
  for (double k : {1.0, 1.5}) {
    CAPTURE(k);
    auto body = from_monotone_map(Poset::product({unit, R}), Poset::product({R, R}), [k](const Element& f) {
      const Element& m = f[1];
      if (m.is_top()) return std::optional<Element>(tuple({Element::top(), Element::top()}));
      double next = 100.0 + k * m.as_scalar();
      return std::optional<Element>(tuple({scalar(next), scalar(next)}));
    });
    TraceOptions opts;
    opts.max_iter = 500;
    auto loop = trace(body, opts);
    CHECK_THROWS_AS(loop.query(Element::unit()), DivergenceError);
    try {
      loop.query(Element::unit());
    } catch (const DivergenceError& e) {
      CHECK_FALSE(e.last_iterate().empty());
      CHECK(e.iterations() >= 1);
    }
    CHECK(divergence_as_infeasible(loop).query(Element::unit()).empty());
  }
}

TEST_CASE("loop values escaping to top are dropped") {
  const Poset unit = Poset::product({});
  auto body = from_monotone_map(Poset::product({unit, R}), Poset::product({R, R}), [](const Element&) {
    return std::optional<Element>(tuple({scalar(1.0), Element::top()}));
  });
  CHECK_THROWS_AS(trace(body).query(Element::unit()), DivergenceError);
}

TEST_CASE("trace rejects loop posets without a least element") {
  Poset flat = Poset::discrete({"x", "y"});
  auto body = dp_from_mdpi({Poset::product({R, flat}), Poset::product({R, flat}), {}, ""});
  CHECK_THROWS_AS(trace(body), UnsupportedError);
  CHECK_THROWS_AS(trace(dp_from_mdpi({R, R, {}, ""})), PosetMismatchError);
}

TEST_CASE("actuator catalogue at 3 m/s") {
  const Poset vel = Poset::nonneg_real("m/s");
  const Poset mc = Poset::product({Poset::nonneg_real("g"), Poset::nonneg_real("$")});
  ImplementationSet act{vel,
                        mc,
                        {{"a1", scalar(3.0), tuple({scalar(50), scalar(50)})},
                         {"a2", scalar(3.0), tuple({scalar(100), scalar(100)})},
                         {"a3", scalar(3.0), tuple({scalar(150), scalar(150)})}},
                        "actuator"};
  auto dp = dp_from_mdpi(act);
  auto res = dp.evaluate(scalar(3.0));
  CHECK(res.minimal_resources.elements() == std::vector<Element>{tuple({scalar(50), scalar(50)})});
  CHECK(res.witnesses.at(tuple({scalar(50), scalar(50)})) == std::vector<Witness>{{"actuator:a1"}});
  CHECK(dp.query(scalar(3.5)).empty());
  CHECK(feasible(dp, scalar(2.0), tuple({scalar(60), scalar(50)})));
  CHECK_FALSE(feasible(dp, scalar(2.0), tuple({scalar(40), scalar(50)})));
  CHECK_THROWS_AS(dp.query(label("fast")), DomainError);
}

TEST_CASE("union witnesses name the branch") {
  const Poset v = Poset::nonneg_real("m/s");
  auto a = dp_from_mdpi({v, R, {{"x", scalar(2.0), scalar(5.0)}}, ""}).renamed("cheap");
  auto b = dp_from_mdpi({v, R, {{"y", scalar(4.0), scalar(9.0)}}, ""}).renamed("fast");
  auto u = union_of(a, b);
  auto r = u.evaluate(scalar(1.0));
  CHECK(r.witnesses.at(scalar(5.0)) == std::vector<Witness>{{"cheap", "x"}});
  r = u.evaluate(scalar(3.0));
  CHECK(r.witnesses.at(scalar(9.0)) == std::vector<Witness>{{"fast", "y"}});
}

TEST_CASE("dual query on a grid") {
  // speed v costs 10 v; budget 35 -> best grid speed is 3
  auto dp = from_monotone_map(R, R, [](const Element& f) {
    return std::optional<Element>(f.is_top() ? Element::top() : scalar(10.0 * f.as_scalar()));
  });
  std::vector<Element> grid;
  for (int i = 0; i <= 5; ++i) grid.push_back(scalar(i));
  auto best = query_fix_res_max_fun(dp, scalar(35.0), grid);
  CHECK(best.poset() == Poset::opposite(R));
  CHECK(best.elements() == std::vector<Element>{scalar(3.0)});
  CHECK_THROWS_AS(query_fix_res_max_fun(dp, scalar(35.0), {}), DomainError);
  CHECK(query_fix_fun_min_res(dp, scalar(2.0)).minimal_resources.elements() == std::vector<Element>{scalar(20.0)});
}

TEST_CASE("series rejects mismatched posets") {
  auto a = dp_from_mdpi({R, Poset::nonneg_real("g"), {}, ""});
  auto b = dp_from_mdpi({Poset::nonneg_real("kg"), R, {}, ""});
  CHECK_THROWS_AS(series(a, b), PosetMismatchError);
  CHECK_THROWS_AS(apply(BinaryOp::union_, a, b), PosetMismatchError);
}

TEST_CASE("small chains on the reals") {
  auto inc = from_monotone_map(R, R, [](const Element& f) {
    return std::optional<Element>(f.is_top() ? f : scalar(f.as_scalar() + 1));
  });
  auto dbl = from_monotone_map(R, R, [](const Element& f) {
    return std::optional<Element>(f.is_top() ? f : scalar(2 * f.as_scalar()));
  });
  auto none = from_candidates(R, R, [](const Element&) { return std::vector<Element>{}; });
  CHECK(series(inc, dbl).query(scalar(3)).elements() == std::vector<Element>{scalar(8)});
  CHECK(series(none, dbl).query(scalar(3)).empty());
  CHECK(parallel(inc, dbl).query(tuple({scalar(1), scalar(3)})).elements() ==
        std::vector<Element>{tuple({scalar(2), scalar(6)})});
  CHECK(parallel(inc, none).query(tuple({scalar(1), scalar(3)})).empty());
  CHECK(union_of(none, dbl).query(scalar(4)).elements() == std::vector<Element>{scalar(8)});
  CHECK(intersection_of(inc, dbl).query(scalar(4)).elements() == std::vector<Element>{scalar(8)});
  CHECK(union_of(inc, dbl).query(scalar(4)).elements() == std::vector<Element>{scalar(5)});
}

TEST_CASE("trace of a loop-free body is the projected query") {
  auto body = from_monotone_map(Poset::product({R, R}), Poset::product({R, R}), [](const Element& f) {
    const Element& p = f[0];
    return std::optional<Element>(tuple({p.is_top() ? p : scalar(3 * p.as_scalar()), scalar(7)}));
  });
  CHECK(trace(body).query(scalar(2)).elements() == std::vector<Element>{scalar(6)});
}

TEST_CASE("parallel is associative up to regrouping") {
  Rng rng(26);
  auto regroup = [](const Element& x) { return tuple({x[0][0], tuple({x[0][1], x[1]})}); };
  for (int trial = 0; trial < 200; ++trial) {
    Poset A = random_discrete(rng, 2), B = random_discrete(rng, 2), C = random_discrete(rng, 2);
    auto a = dp_from_mdpi(random_mdpi(rng, A, B)), b = dp_from_mdpi(random_mdpi(rng, B, C));
    auto c = dp_from_mdpi(random_mdpi(rng, C, A));
    auto left = parallel(parallel(a, b), c), right = parallel(a, parallel(b, c));
    for (const auto& f : enumerate(left.fun_poset())) {
      std::set<Element> l;
      for (const auto& r : left.query(f)) l.insert(regroup(r));
      CHECK(l == as_set(right.query(regroup(f))));
    }
  }
}

TEST_CASE("dual query against brute force on finite posets") {
  Rng rng(27);
  for (int trial = 0; trial < 200; ++trial) {
    Poset F = random_finite(rng, 6), Rs = random_finite(rng, 6);
    auto m = random_mdpi(rng, F, Rs);
    auto dp = dp_from_mdpi(m);
    auto rel = relation_of(m);
    auto fs = enumerate(F);
    Element r = pick(rng, enumerate(Rs));
    std::set<Element> ok;
    for (const auto& f : fs)
      if (rel.ok(f, r)) ok.insert(f);
    CHECK(as_set(query_fix_res_max_fun(dp, r, fs)) == brute_minimals(Poset::opposite(F), ok));
  }
}

TEST_CASE("feasibility of an mdpi is implementation coverage") {
  Rng rng(28);
  for (int trial = 0; trial < 200; ++trial) {
    Poset F = random_finite(rng, 6), Rs = random_finite(rng, 6);
    auto m = random_mdpi(rng, F, Rs);
    auto dp = dp_from_mdpi(m);
    for (const auto& f : enumerate(F))
      for (const auto& r : enumerate(Rs)) {
        bool covered = false;
        for (const auto& i : m.impls) covered |= leq(F, f, i.prov) && leq(Rs, i.reqs, r);
        CHECK(feasible(dp, f, r) == covered);
      }
  }
}
