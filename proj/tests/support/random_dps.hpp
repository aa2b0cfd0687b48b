#pragma once
// Random design problems over small finite posets, and a feasibility-relation
// oracle that evaluates compositions by exhaustive enumeration.

#include <functional>
#include <set>

#include "codp/design_problem.hpp"
#include "support/random_posets.hpp"

namespace codp::testing {

/// Feasibility relation f -> r, evaluated pointwise.
struct Relation {
  Poset fun, res;
  std::function<bool(const Element&, const Element&)> ok;

  std::set<Element> minimal_resources(const Element& f) const {
    std::set<Element> feas;
    for (const auto& r : enumerate(res))
      if (ok(f, r)) feas.insert(r);
    return brute_minimals(res, feas);
  }
};

/// Random DP with implementations; monotone by construction.
inline ImplementationSet random_mdpi(Rng& rng, const Poset& fun, const Poset& res, int max_impls = 5) {
  std::uniform_int_distribution<int> count(0, max_impls);
  auto fs = enumerate(fun);
  auto rs = enumerate(res);
  ImplementationSet m{fun, res, {}, ""};
  const int n = count(rng);
  for (int i = 0; i < n; ++i) m.impls.push_back({"i" + std::to_string(i), pick(rng, fs), pick(rng, rs)});
  return m;
}

/// Direct relation of an implementation set: (f, r) feasible iff some impl covers f within r.
inline Relation relation_of(const ImplementationSet& m) {
  return {m.fun, m.res, [m](const Element& f, const Element& r) {
            for (const auto& i : m.impls)
              if (leq(m.fun, f, i.prov) && leq(m.res, i.reqs, r)) return true;
            return false;
          }};
}

inline Relation rel_series(const Relation& a, const Relation& b) {
  auto mids = enumerate(a.res);
  return {a.fun, b.res, [a, b, mids](const Element& f, const Element& r) {
            for (const auto& m : mids)
              if (a.ok(f, m) && b.ok(m, r)) return true;
            return false;
          }};
}

inline Relation rel_parallel(const Relation& a, const Relation& b) {
  return {Poset::product({a.fun, b.fun}), Poset::product({a.res, b.res}),
          [a, b](const Element& f, const Element& r) { return a.ok(f[0], r[0]) && b.ok(f[1], r[1]); }};
}

inline Relation rel_union(const Relation& a, const Relation& b) {
  return {a.fun, a.res, [a, b](const Element& f, const Element& r) { return a.ok(f, r) || b.ok(f, r); }};
}

inline Relation rel_intersection(const Relation& a, const Relation& b) {
  return {a.fun, a.res, [a, b](const Element& f, const Element& r) { return a.ok(f, r) && b.ok(f, r); }};
}

/// (p, q) feasible iff some loop value l makes ((p, l), (q, l)) feasible.
inline Relation rel_trace(const Relation& a) {
  Poset L = a.fun.components()[1];
  auto ls = enumerate(L);
  return {a.fun.components()[0], a.res.components()[0], [a, ls](const Element& p, const Element& q) {
            for (const auto& l : ls)
              if (a.ok(tuple({p, l}), tuple({q, l}))) return true;
            return false;
          }};
}

/// Random finite poset that has a least element "bot".
inline Poset random_pointed(Rng& rng, int max_n) {
  Poset p = random_discrete(rng, std::max(1, max_n - 1));
  std::vector<std::string> labels = p.labels();
  std::vector<std::pair<std::string, std::string>> order;
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    order.emplace_back("bot", labels[i]);
    for (int j = 0; j < n; ++j)
      if (i != j && p.discrete_leq(i, j)) order.emplace_back(labels[i], labels[j]);
  }
  labels.push_back("bot");
  return Poset::discrete(labels, order);
}

}  // namespace codp::testing
