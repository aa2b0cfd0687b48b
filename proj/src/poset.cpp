#include "codp/poset.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace codp {

struct Poset::Node {
  Kind kind;
  std::string units;
  std::vector<std::string> labels;
  std::unordered_map<std::string, int> index;
  // closure(i, j) == true iff labels[i] <= labels[j]
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> closure;
  std::vector<Poset> components;
};

Poset Poset::nonneg_real(std::string units) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::nonneg_real;
  n->units = std::move(units);
  return Poset(std::move(n));
}

Poset Poset::discrete(std::vector<std::string> labels,
                      const std::vector<std::pair<std::string, std::string>>& order) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::discrete;
  const int size = static_cast<int>(labels.size());
  for (int i = 0; i < size; ++i) {
    if (!n->index.emplace(labels[i], i).second)
      throw DomainError("discrete poset: duplicate label '" + labels[i] + "'");
  }
  n->labels = std::move(labels);
  n->closure = decltype(n->closure)::Constant(size, size, false);
  for (int i = 0; i < size; ++i) n->closure(i, i) = true;
  for (const auto& [a, b] : order) {
    auto ia = n->index.find(a);
    auto ib = n->index.find(b);
    if (ia == n->index.end() || ib == n->index.end())
      throw DomainError("discrete poset: order pair (" + a + ", " + b + ") names an unknown label");
    n->closure(ia->second, ib->second) = true;
  }
  // Warshall closure
  for (int k = 0; k < size; ++k)
    for (int i = 0; i < size; ++i)
      if (n->closure(i, k))
        for (int j = 0; j < size; ++j)
          if (n->closure(k, j)) n->closure(i, j) = true;
  for (int i = 0; i < size; ++i)
    for (int j = i + 1; j < size; ++j)
      if (n->closure(i, j) && n->closure(j, i))
        throw DomainError("discrete poset: order is not antisymmetric (" + n->labels[i] + ", " +
                          n->labels[j] + ")");
  return Poset(std::move(n));
}

Poset Poset::product(std::vector<Poset> components) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::product;
  n->components = std::move(components);
  return Poset(std::move(n));
}

Poset Poset::opposite(Poset inner) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::opposite;
  n->components.push_back(std::move(inner));
  return Poset(std::move(n));
}

Poset::Kind Poset::kind() const { return node_->kind; }
const std::string& Poset::units() const { return node_->units; }
const std::vector<std::string>& Poset::labels() const { return node_->labels; }
const std::vector<Poset>& Poset::components() const { return node_->components; }
const Poset& Poset::inner() const { return node_->components.front(); }

int Poset::index_of(const std::string& label) const {
  auto it = node_->index.find(label);
  return it == node_->index.end() ? -1 : it->second;
}

bool Poset::discrete_leq(int i, int j) const { return node_->closure(i, j); }

bool Poset::contains(const Element& x) const {
  switch (kind()) {
    case Kind::nonneg_real:
      return x.is_scalar() && x.as_scalar() >= 0.0;  // NaN fails
    case Kind::discrete:
      return x.is_label() && index_of(x.as_label()) >= 0;
    case Kind::product: {
      if (!x.is_tuple() || x.items().size() != components().size()) return false;
      for (std::size_t i = 0; i < components().size(); ++i)
        if (!components()[i].contains(x.items()[i])) return false;
      return true;
    }
    case Kind::opposite:
      return inner().contains(x);
  }
  return false;
}

bool Poset::is_finite() const {
  switch (kind()) {
    case Kind::nonneg_real:
      return false;
    case Kind::discrete:
      return true;
    case Kind::product:
      return std::all_of(components().begin(), components().end(),
                         [](const Poset& c) { return c.is_finite(); });
    case Kind::opposite:
      return inner().is_finite();
  }
  return false;
}

std::string Poset::to_string() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::nonneg_real:
      os << "real";
      if (!units().empty()) os << "[" << units() << "]";
      break;
    case Kind::discrete:
      os << "discrete{";
      for (std::size_t i = 0; i < labels().size(); ++i) os << (i ? "," : "") << labels()[i];
      os << "}";
      break;
    case Kind::product:
      os << "(";
      for (std::size_t i = 0; i < components().size(); ++i)
        os << (i ? " x " : "") << components()[i].to_string();
      os << ")";
      break;
    case Kind::opposite:
      os << "op(" << inner().to_string() << ")";
      break;
  }
  return os.str();
}

bool operator==(const Poset& a, const Poset& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Poset::Kind::nonneg_real:
      return a.units() == b.units();
    case Poset::Kind::discrete:
      return a.labels() == b.labels() && (a.node_->closure == b.node_->closure).all();
    case Poset::Kind::product:
    case Poset::Kind::opposite:
      return a.components() == b.components();
  }
  return false;
}

void require_member(const Poset& p, const Element& x, const char* what) {
  if (!p.contains(x))
    throw DomainError(std::string(what) + " " + x.to_string() + " is not in " + p.to_string());
}

void require_same_poset(const Poset& a, const Poset& b, const char* what) {
  if (a != b)
    throw PosetMismatchError(std::string(what) + ": " + a.to_string() + " vs " + b.to_string());
}

namespace {

bool leq_unchecked(const Poset& p, const Element& a, const Element& b) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      return a.as_scalar() <= b.as_scalar();
    case Poset::Kind::discrete:
      return p.discrete_leq(p.index_of(a.as_label()), p.index_of(b.as_label()));
    case Poset::Kind::product: {
      const auto& cs = p.components();
      for (std::size_t i = 0; i < cs.size(); ++i)
        if (!leq_unchecked(cs[i], a.items()[i], b.items()[i])) return false;
      return true;
    }
    case Poset::Kind::opposite:
      return leq_unchecked(p.inner(), b, a);
  }
  return false;
}

std::vector<Element> cartesian(const std::vector<std::vector<Element>>& factors) {
  std::vector<Element> out;
  std::vector<Element> current;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == factors.size()) {
      out.push_back(Element::tuple(current));
      return;
    }
    for (const auto& e : factors[i]) {
      current.push_back(e);
      self(self, i + 1);
      current.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

// Shared by both bound directions; `upper` selects common upper bounds.
std::vector<Element> extremal_bounds(const Poset& p, const Element& a, const Element& b, bool upper) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real: {
      const double x = a.as_scalar(), y = b.as_scalar();
      return {Element::scalar(upper ? std::max(x, y) : std::min(x, y))};
    }
    case Poset::Kind::discrete: {
      const int ia = p.index_of(a.as_label()), ib = p.index_of(b.as_label());
      const int n = static_cast<int>(p.labels().size());
      std::vector<int> common;
      for (int z = 0; z < n; ++z) {
        bool ok = upper ? (p.discrete_leq(ia, z) && p.discrete_leq(ib, z))
                        : (p.discrete_leq(z, ia) && p.discrete_leq(z, ib));
        if (ok) common.push_back(z);
      }
      std::vector<Element> out;
      for (int z : common) {
        bool extremal = true;
        for (int w : common) {
          if (w == z) continue;
          if (upper ? p.discrete_leq(w, z) : p.discrete_leq(z, w)) {
            extremal = false;
            break;
          }
        }
        if (extremal) out.push_back(Element::label(p.labels()[z]));
      }
      return out;
    }
    case Poset::Kind::product: {
      std::vector<std::vector<Element>> factors;
      for (std::size_t i = 0; i < p.components().size(); ++i) {
        factors.push_back(extremal_bounds(p.components()[i], a.items()[i], b.items()[i], upper));
        if (factors.back().empty()) return {};
      }
      return cartesian(factors);
    }
    case Poset::Kind::opposite:
      return extremal_bounds(p.inner(), a, b, !upper);
  }
  return {};
}

std::optional<Element> extremal_element(const Poset& p, bool least) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      return least ? Element::scalar(0.0) : Element::top();
    case Poset::Kind::discrete: {
      const int n = static_cast<int>(p.labels().size());
      for (int z = 0; z < n; ++z) {
        bool all = true;
        for (int w = 0; w < n && all; ++w) all = least ? p.discrete_leq(z, w) : p.discrete_leq(w, z);
        if (all) return Element::label(p.labels()[z]);
      }
      return std::nullopt;
    }
    case Poset::Kind::product: {
      Element::Tuple items;
      for (const auto& c : p.components()) {
        auto e = extremal_element(c, least);
        if (!e) return std::nullopt;
        items.push_back(std::move(*e));
      }
      return Element::tuple(std::move(items));
    }
    case Poset::Kind::opposite:
      return extremal_element(p.inner(), !least);
  }
  return std::nullopt;
}

}  // namespace

bool leq(const Poset& p, const Element& a, const Element& b) {
  require_member(p, a);
  require_member(p, b);
  return leq_unchecked(p, a, b);
}

std::vector<Element> enumerate(const Poset& p) {
  switch (p.kind()) {
    case Poset::Kind::nonneg_real:
      throw InfinitePosetError("cannot enumerate " + p.to_string());
    case Poset::Kind::discrete: {
      std::vector<Element> out;
      for (const auto& l : p.labels()) out.push_back(Element::label(l));
      return out;
    }
    case Poset::Kind::product: {
      std::vector<std::vector<Element>> factors;
      for (const auto& c : p.components()) factors.push_back(enumerate(c));
      return cartesian(factors);
    }
    case Poset::Kind::opposite:
      return enumerate(p.inner());
  }
  return {};
}

std::optional<Element> least_element(const Poset& p) { return extremal_element(p, true); }
std::optional<Element> greatest_element(const Poset& p) { return extremal_element(p, false); }

std::vector<Element> minimal_upper_bounds(const Poset& p, const Element& a, const Element& b) {
  require_member(p, a);
  require_member(p, b);
  return extremal_bounds(p, a, b, true);
}

std::vector<Element> maximal_lower_bounds(const Poset& p, const Element& a, const Element& b) {
  require_member(p, a);
  require_member(p, b);
  return extremal_bounds(p, a, b, false);
}

Antichain minimals(const Poset& p, std::vector<Element> xs) {
  for (const auto& x : xs) require_member(p, x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  Antichain out(p);
  if (p.kind() == Poset::Kind::nonneg_real) {
    // chain: the minimum is first in the canonical order
    if (!xs.empty()) out.elements_.push_back(xs.front());
    return out;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < xs.size() && !dominated; ++j)
      dominated = j != i && leq_unchecked(p, xs[j], xs[i]);
    if (!dominated) out.elements_.push_back(xs[i]);
  }
  return out;
}

bool upper_set_contains(const Antichain& ac, const Element& x) {
  require_member(ac.poset(), x);
  return std::any_of(ac.begin(), ac.end(),
                     [&](const Element& a) { return leq_unchecked(ac.poset(), a, x); });
}

Antichain upper_union(const Antichain& a, const Antichain& b) {
  require_same_poset(a.poset(), b.poset(), "upper_union");
  std::vector<Element> all(a.elements());
  all.insert(all.end(), b.begin(), b.end());
  return minimals(a.poset(), std::move(all));
}

Antichain upper_intersection(const Antichain& a, const Antichain& b) {
  require_same_poset(a.poset(), b.poset(), "upper_intersection");
  std::vector<Element> all;
  for (const auto& x : a)
    for (const auto& y : b) {
      auto bounds = extremal_bounds(a.poset(), x, y, true);
      all.insert(all.end(), bounds.begin(), bounds.end());
    }
  return minimals(a.poset(), std::move(all));
}

bool upper_subset(const Antichain& a, const Antichain& b) {
  require_same_poset(a.poset(), b.poset(), "upper_subset");
  return std::all_of(a.begin(), a.end(), [&](const Element& x) { return upper_set_contains(b, x); });
}

std::string Antichain::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < elements_.size(); ++i) os << (i ? ", " : "") << elements_[i];
  os << '}';
  return os.str();
}

}  // namespace codp
