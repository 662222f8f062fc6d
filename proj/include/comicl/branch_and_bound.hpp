#pragma once

// Branch and bound for mixed-integer linear models.
//
// Strategy (all tie-breaks deterministic):
//  * node selection: best-bound first (parent LP bound, then insertion order);
//    after solving a node the search dives depth-first into the child whose
//    branch matches the LP value rounded to the nearest integer, queueing the
//    sibling.
//  * branching variable: most fractional value, ties by lowest index.
//  * each node's LP is solved from scratch with tightened bounds; there is
//    no warm starting.
//  * pruning is exact (cutoff = incumbent - 1e-9 scaled); a relative-gap
//    target only stops the search, it never discards nodes, so the reported
//    best bound stays valid and rel_gap = 0 yields a proven optimum.
//
// Every accepted incumbent is re-verified against the original model with
// the absolute MIP feasibility tolerance; a violation raises an error rather
// than returning a wrong answer.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "comicl/simplex.hpp"

namespace comicl {

enum class MipStatus { Optimal, GapReached, Infeasible, Unbounded, NodeLimit, TimeLimit };

inline const char* mip_status_text(MipStatus s) {
  switch (s) {
    case MipStatus::Optimal: return "optimal";
    case MipStatus::GapReached: return "gap-reached";
    case MipStatus::Infeasible: return "infeasible";
    case MipStatus::Unbounded: return "unbounded";
    case MipStatus::NodeLimit: return "node-limit";
    case MipStatus::TimeLimit: return "time-limit";
  }
  return "?";
}

inline MipStatus mip_status_from_text(const std::string& s) {
  for (MipStatus st : {MipStatus::Optimal, MipStatus::GapReached,
                       MipStatus::Infeasible, MipStatus::Unbounded,
                       MipStatus::NodeLimit, MipStatus::TimeLimit}) {
    if (s == mip_status_text(st)) return st;
  }
  throw Error("unknown solve status '" + s + "'");
}

struct SolveOptions {
  double rel_gap = 0.01;
  std::int64_t node_limit = -1;  // < 0 disables
  double time_limit_s = -1.0;    // < 0 disables
  std::ostream* log = nullptr;   // incumbent-improvement progress lines
};

struct SolveResult {
  MipStatus status = MipStatus::Infeasible;
  std::vector<double> x;  // empty when no incumbent was found
  double objective = std::numeric_limits<double>::quiet_NaN();
  double best_bound = -kInf;
  double gap = kInf;
  std::int64_t nodes = 0;
  double wall_seconds = 0.0;
  bool has_incumbent() const { return !x.empty(); }
};

namespace detail {

class BranchAndBound {
 public:
  BranchAndBound(const MipModel& model, const SolveOptions& opt)
      : model_(model), opt_(opt), start_(Clock::now()) {
    for (const Variable& v : model.vars()) {
      root_bounds_.push_back(Interval{v.lb, v.ub});
      integer_.push_back(v.kind != VarKind::Continuous);
    }
  }

  SolveResult run() {
    push_node(root_bounds_, -kInf);
    bool hit_limit = false;
    MipStatus limit_status = MipStatus::NodeLimit;

    while (!open_.empty()) {
      if (gap_reached()) break;
      Node node = pop_node();
      if (node.parent_bound >= cutoff()) continue;  // superseded by incumbent
      if (!dive(std::move(node), &hit_limit, &limit_status)) break;
    }

    SolveResult res;
    res.nodes = nodes_;
    res.wall_seconds = elapsed();
    if (unbounded_) {
      res.status = MipStatus::Unbounded;
      return res;
    }
    if (has_incumbent_) {
      res.x = incumbent_;
      res.objective = incumbent_obj_;
    }
    if (hit_limit) {
      res.status = limit_status;
      res.best_bound = global_bound();
      res.gap = rel_gap_value(res.best_bound);
      return res;
    }
    if (!has_incumbent_) {
      res.status = MipStatus::Infeasible;
      return res;
    }
    if (open_.empty()) {
      // Tree exhausted: proven optimum.
      res.status = MipStatus::Optimal;
      res.best_bound = incumbent_obj_;
      res.gap = 0.0;
      return res;
    }
    res.best_bound = global_bound();
    res.gap = rel_gap_value(res.best_bound);
    res.status = res.gap <= 1e-9 ? MipStatus::Optimal : MipStatus::GapReached;
    return res;
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct Node {
    std::vector<Interval> bounds;
    double parent_bound = -kInf;
    std::uint64_t seq = 0;
  };
  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
      if (a.parent_bound != b.parent_bound) return a.parent_bound > b.parent_bound;
      return a.seq > b.seq;
    }
  };

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  double cutoff() const {
    if (!has_incumbent_) return kInf;
    return incumbent_obj_ - 1e-9 * std::max(1.0, std::fabs(incumbent_obj_));
  }

  double global_bound() const {
    double b = open_.empty() ? kInf : open_.top().parent_bound;
    if (has_incumbent_) b = std::min(b, incumbent_obj_);
    return b;
  }

  double rel_gap_value(double bound) const {
    if (!has_incumbent_) return kInf;
    return (incumbent_obj_ - bound) /
           std::max(1e-9, std::fabs(incumbent_obj_));
  }

  bool gap_reached() const {
    if (!has_incumbent_ || open_.empty()) return false;
    return rel_gap_value(open_.top().parent_bound) <= opt_.rel_gap;
  }

  void push_node(std::vector<Interval> bounds, double parent_bound) {
    open_.push(Node{std::move(bounds), parent_bound, seq_++});
  }

  Node pop_node() {
    Node n = open_.top();
    open_.pop();
    return n;
  }

  // Returns false when the whole search must stop (limit hit).
  bool dive(Node node, bool* hit_limit, MipStatus* limit_status) {
    while (true) {
      if (node.parent_bound >= cutoff()) return true;  // superseded mid-dive
      if (opt_.node_limit >= 0 && nodes_ >= opt_.node_limit) {
        *hit_limit = true;
        *limit_status = MipStatus::NodeLimit;
        // Return the unexplored chain node so the reported bound stays valid.
        push_node(std::move(node.bounds), node.parent_bound);
        return false;
      }
      if (opt_.time_limit_s >= 0 && elapsed() >= opt_.time_limit_s) {
        *hit_limit = true;
        *limit_status = MipStatus::TimeLimit;
        push_node(std::move(node.bounds), node.parent_bound);
        return false;
      }

      const LpResult lp = solve_lp(model_, node.bounds);
      ++nodes_;
      if (lp.status == LpStatus::Infeasible) return true;
      if (lp.status == LpStatus::Unbounded) {
        // A relaxation without a finite bound: propagate.
        unbounded_ = true;
        return false;
      }
      if (lp.status != LpStatus::Optimal) {
        throw Error("LP relaxation failed at node " + std::to_string(nodes_) +
                    ": " + lp_status_text(lp.status) +
                    (lp.message.empty() ? "" : " (" + lp.message + ")"));
      }
      if (lp.objective >= cutoff()) return true;  // pruned by bound

      const std::size_t branch_var = most_fractional(lp.x);
      if (branch_var == kNone) {
        accept_incumbent(lp);
        return true;
      }

      const double v = lp.x[branch_var];
      const double fl = std::floor(v);
      Node down = node;
      down.bounds[branch_var].hi = std::min(down.bounds[branch_var].hi, fl);
      Node up = std::move(node);
      up.bounds[branch_var].lo = std::max(up.bounds[branch_var].lo, fl + 1.0);

      // Dive toward the child containing the rounded LP value; ties go down.
      const bool dive_down = (v - fl) <= 0.5;
      Node& next = dive_down ? down : up;
      Node& sibling = dive_down ? up : down;
      push_node(std::move(sibling.bounds), lp.objective);
      next.parent_bound = lp.objective;
      node = std::move(next);
      // Mid-dive gap check: the chain node now carries a fresh bound.
      if (has_incumbent_ &&
          std::min(open_.empty() ? kInf : open_.top().parent_bound,
                   node.parent_bound) >=
              incumbent_obj_ -
                  opt_.rel_gap * std::max(1e-9, std::fabs(incumbent_obj_))) {
        // Everything open is within the gap target; put the chain node back
        // so the reported bound accounts for it, then stop.
        push_node(std::move(node.bounds), node.parent_bound);
        return true;
      }
    }
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::size_t most_fractional(const std::vector<double>& x) const {
    std::size_t best = kNone;
    double best_score = kIntegralityTol;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!integer_[j]) continue;
      const double frac = x[j] - std::floor(x[j]);
      const double score = std::min(frac, 1.0 - frac);
      if (score > best_score) {
        best = j;
        best_score = score;
      }
    }
    return best;
  }

  void accept_incumbent(const LpResult& lp) {
    if (has_incumbent_ && lp.objective >= cutoff()) return;
    std::string why;
    if (!model_.check_feasible(lp.x, kMipFeasTol, &why)) {
      throw Error("integral node solution failed feasibility re-check (" +
                  why + ") at node " + std::to_string(nodes_));
    }
    incumbent_ = lp.x;
    incumbent_obj_ = lp.objective;
    has_incumbent_ = true;
    if (opt_.log) {
      const double b = global_bound();
      (*opt_.log) << "node=" << nodes_ << " incumbent=" << incumbent_obj_
                  << " bound=" << b << " gap=" << rel_gap_value(b)
                  << " t=" << elapsed() << "s\n";
    }
  }

  const MipModel& model_;
  SolveOptions opt_;
  Clock::time_point start_;

  std::vector<Interval> root_bounds_;
  std::vector<bool> integer_;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  std::uint64_t seq_ = 0;
  std::int64_t nodes_ = 0;

  std::vector<double> incumbent_;
  double incumbent_obj_ = kInf;
  bool has_incumbent_ = false;
  bool unbounded_ = false;
};

}  // namespace detail

inline SolveResult solve_mip(const MipModel& model, const SolveOptions& opt = {}) {
  detail::BranchAndBound bb(model, opt);
  return bb.run();
}

}  // namespace comicl
