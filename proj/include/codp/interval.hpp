#pragma once

#include "codp/design_problem.hpp"

namespace codp {

/// A design problem known only up to an interval [lower, upper]: `lower` is
/// the pessimistic estimate, `upper` the optimistic one.
class IntervalDP {
 public:
  /// Throws PosetMismatchError unless both endpoints share F and R.
  IntervalDP(DesignProblem lower, DesignProblem upper);

  const DesignProblem& lower() const { return lower_; }
  const DesignProblem& upper() const { return upper_; }
  const Poset& fun_poset() const { return lower_.fun_poset(); }
  const Poset& res_poset() const { return lower_.res_poset(); }

  /// Whether the pessimistic upper set sits inside the optimistic one at f.
  bool contains_at(const Element& f) const;

 private:
  DesignProblem lower_;
  DesignProblem upper_;
};

/// The degenerate interval [dp, dp].
IntervalDP embed_dp(const DesignProblem& dp);

/// Endpoint-wise lift of a binary operation.
IntervalDP interval_lift(BinaryOp op, const IntervalDP& a, const IntervalDP& b);
IntervalDP interval_trace(const IntervalDP& a, TraceOptions opts = {});

}  // namespace codp
