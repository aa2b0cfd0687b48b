#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codp/element.hpp"
#include "codp/errors.hpp"

namespace codp {

/// An ordered domain with a decidable order relation.
///
/// Four shapes are supported: non-negative reals extended with a top element
/// (units are metadata, compared as strings), finite posets given by labels
/// and generating order pairs, finite products, and opposites. Posets are
/// immutable handles; copies share structure.
class Poset {
 public:
  enum class Kind { nonneg_real, discrete, product, opposite };

  /// R>=0 u {top}. Elements are Element::scalar(v) with v >= 0, or Element::top().
  static Poset nonneg_real(std::string units = "");

  /// Finite poset. `order` lists generating pairs (a, b) meaning a <= b; the
  /// reflexive-transitive closure is taken and must be antisymmetric.
  static Poset discrete(std::vector<std::string> labels,
                        const std::vector<std::pair<std::string, std::string>>& order = {});

  /// Componentwise order on tuples. The empty product is the one-point poset.
  static Poset product(std::vector<Poset> components);

  static Poset opposite(Poset inner);

  Kind kind() const;
  const std::string& units() const;
  const std::vector<std::string>& labels() const;
  const std::vector<Poset>& components() const;
  const Poset& inner() const;

  /// Label index for discrete posets, or -1.
  int index_of(const std::string& label) const;

  /// Whether the closure of the generating pairs puts `i` below `j` (discrete only).
  bool discrete_leq(int i, int j) const;

  bool contains(const Element& x) const;
  bool is_finite() const;
  std::string to_string() const;

  friend bool operator==(const Poset& a, const Poset& b);
  friend bool operator!=(const Poset& a, const Poset& b) { return !(a == b); }

 private:
  struct Node;
  explicit Poset(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// a <= b in p. Throws DomainError if either element is not in p.
bool leq(const Poset& p, const Element& a, const Element& b);

/// All elements of a finite poset, each once, in a deterministic order.
/// Throws InfinitePosetError when p contains a real component.
std::vector<Element> enumerate(const Poset& p);

/// Least element of p, if any.
std::optional<Element> least_element(const Poset& p);
/// Greatest element of p, if any.
std::optional<Element> greatest_element(const Poset& p);

/// Minimal elements of the set of common upper bounds of a and b.
/// For chains and products of chains this is the singleton join.
std::vector<Element> minimal_upper_bounds(const Poset& p, const Element& a, const Element& b);
/// Maximal elements of the set of common lower bounds of a and b.
std::vector<Element> maximal_lower_bounds(const Poset& p, const Element& a, const Element& b);

void require_member(const Poset& p, const Element& x, const char* what = "element");
void require_same_poset(const Poset& a, const Poset& b, const char* what);

/// Finite set of pairwise incomparable elements, standing for its upper closure.
/// The empty antichain is the empty upper set.
class Antichain {
 public:
  explicit Antichain(Poset p) : poset_(std::move(p)) {}

  const Poset& poset() const { return poset_; }
  const std::vector<Element>& elements() const { return elements_; }
  bool empty() const { return elements_.empty(); }
  std::size_t size() const { return elements_.size(); }
  auto begin() const { return elements_.begin(); }
  auto end() const { return elements_.end(); }

  friend bool operator==(const Antichain& a, const Antichain& b) {
    return a.poset_ == b.poset_ && a.elements_ == b.elements_;
  }
  friend bool operator!=(const Antichain& a, const Antichain& b) { return !(a == b); }

  std::string to_string() const;

 private:
  friend Antichain minimals(const Poset& p, std::vector<Element> xs);
  Poset poset_;
  std::vector<Element> elements_;  // sorted by Element::operator<
};

/// The minimal elements of xs; the result generates the same upper set.
Antichain minimals(const Poset& p, std::vector<Element> xs);

/// Membership of x in the upper closure of ac.
bool upper_set_contains(const Antichain& ac, const Element& x);

Antichain upper_union(const Antichain& a, const Antichain& b);
Antichain upper_intersection(const Antichain& a, const Antichain& b);

/// U(a) is contained in U(b), i.e. every element of a lies above some element of b.
bool upper_subset(const Antichain& a, const Antichain& b);

}  // namespace codp
