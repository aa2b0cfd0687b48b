#include "codp/interval.hpp"

namespace codp {

IntervalDP::IntervalDP(DesignProblem lower, DesignProblem upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  require_same_poset(lower_.fun_poset(), upper_.fun_poset(), "interval endpoints (functionalities)");
  require_same_poset(lower_.res_poset(), upper_.res_poset(), "interval endpoints (resources)");
}

bool IntervalDP::contains_at(const Element& f) const { return upper_subset(lower_.query(f), upper_.query(f)); }

IntervalDP embed_dp(const DesignProblem& dp) { return IntervalDP(dp, dp); }

IntervalDP interval_lift(BinaryOp op, const IntervalDP& a, const IntervalDP& b) {
  return IntervalDP(apply(op, a.lower(), b.lower()), apply(op, a.upper(), b.upper()));
}

IntervalDP interval_trace(const IntervalDP& a, TraceOptions opts) {
  return IntervalDP(trace(a.lower(), opts), trace(a.upper(), opts));
}

}  // namespace codp
