#pragma once

#include "tf4ctr/tape.hpp"

#include <cmath>
#include <vector>

namespace tf4ctr {

struct GradCheckEntry {
  int param = -1;
  double max_abs_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double max_abs_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Central-difference check of the tape's analytic gradients.
//
// `build` must construct the scalar loss from the current parameter values
// and return its node id; it is re-invoked once per perturbed element, with
// the tape truncated back to its entry size in between. Probe at points where
// the loss is twice differentiable (keep |relu preactivations| >> eps and
// stay away from clamp boundaries). Clears all gradients on the tape.
template <class S, class BuildLoss>
GradCheckReport grad_check(Tape<S>& tape, BuildLoss&& build,
                           const std::vector<int>& params, double eps, double tol) {
  if (!(eps > 0)) throw Error("grad_check: eps must be positive");
  const int mark = tape.size();

  const int loss = build(tape);
  if (tape.value(loss).size() != 1) {
    tape.truncate(mark);
    throw Error("grad_check: loss must be scalar");
  }
  tape.backward(loss);
  std::vector<Mat<S>> analytic;
  analytic.reserve(params.size());
  for (int p : params) analytic.push_back(tape.grad(p));
  tape.truncate(mark);
  tape.zero_grad();

  GradCheckReport report;
  report.tol = tol;
  {
    NoGradGuard guard(tape);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const int p = params[k];
      GradCheckEntry entry;
      entry.param = p;
      auto& value = tape.value_mut(p);
      for (Eigen::Index i = 0; i < value.rows(); ++i) {
        for (Eigen::Index j = 0; j < value.cols(); ++j) {
          const S saved = value(i, j);
          value(i, j) = saved + S(eps);
          const double up = double(tape.value(build(tape))(0, 0));
          tape.truncate(mark);
          value(i, j) = saved - S(eps);
          const double down = double(tape.value(build(tape))(0, 0));
          tape.truncate(mark);
          value(i, j) = saved;
          const double fd = (up - down) / (2.0 * eps);
          entry.max_abs_err = std::max(entry.max_abs_err,
                                       std::abs(double(analytic[k](i, j)) - fd));
        }
      }
      report.max_abs_err = std::max(report.max_abs_err, entry.max_abs_err);
      report.per_param.push_back(entry);
    }
  }
  report.pass = report.max_abs_err <= tol;
  return report;
}

}  // namespace tf4ctr
