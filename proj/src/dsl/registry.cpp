#include <cmath>

#include "codp/dsl/diagram.hpp"

namespace codp::dsl {

namespace {

double plus_top(double a, double b) { return std::isinf(a) || std::isinf(b) ? INFINITY : a + b; }

void require_real(const Poset& p, const ComponentContext& c, const char* side) {
  if (p.kind() != Poset::Kind::nonneg_real)
    throw DomainError(c.call.component + " on node '" + c.node + "' needs a real " + side + " port");
}

}  // namespace

Registry builtin_registry() {
  Registry r;

  r.add_component("identity", [](const ComponentContext& c) {
    require_same_poset(c.fun, c.res, "identity");
    return from_monotone_map(c.fun, c.res, [](const Element& f) { return std::optional<Element>(f); }, c.node);
  });

  // r >= offset + gain * f on a single real port
  auto affine = [](double offset, double gain, const ComponentContext& c) {
    require_real(c.fun, c, "functionality");
    require_real(c.res, c, "resource");
    if (offset < 0 || gain < 0) throw DomainError(c.call.component + ": coefficients must be nonnegative");
    return from_monotone_map(
        c.fun, c.res,
        [offset, gain](const Element& f) {
          if (f.is_top()) return std::optional<Element>(gain > 0 ? Element::top() : scalar(offset));
          return std::optional<Element>(scalar(offset + gain * f.as_scalar()));
        },
        c.node);
  };
  r.add_component("scale", [affine](const ComponentContext& c) { return affine(0, c.number("factor"), c); });
  r.add_component("affine", [affine](const ComponentContext& c) {
    return affine(c.number_or("offset", 0), c.number_or("gain", 1), c);
  });

  r.add_component("sum", [](const ComponentContext& c) {
    require_real(c.res, c, "resource");
    if (c.fun.kind() == Poset::Kind::nonneg_real)
      return from_monotone_map(c.fun, c.res, [](const Element& f) { return std::optional<Element>(f); }, c.node);
    if (c.fun.kind() != Poset::Kind::product) throw DomainError("sum needs real functionality ports");
    for (const auto& p : c.fun.components()) require_real(p, c, "functionality");
    return from_monotone_map(
        c.fun, c.res,
        [](const Element& f) {
          double s = 0;
          for (const auto& x : f.items()) s = plus_top(s, x.as_scalar());
          return std::optional<Element>(std::isinf(s) ? Element::top() : scalar(s));
        },
        c.node);
  });

  r.add_component("constant", [](const ComponentContext& c) {
    const Value* v = c.call.arg("value");
    if (!v) throw DomainError("constant: missing argument 'value'");
    Element x = to_element(c.res, *v);
    return from_monotone_map(c.fun, c.res, [x](const Element&) { return std::optional<Element>(x); }, c.node);
  });

  return r;
}

}  // namespace codp::dsl
