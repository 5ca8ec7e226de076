#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ugatit/param_store.hpp"
#include "ugatit/rng.hpp"
#include "ugatit/tensor.hpp"

namespace ugatit {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // elements sitting on a kink within the probe step
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  std::string worst_name() const {
    std::string w;
    double m = -1.0;
    for (const auto& e : entries)
      if (e.max_rel_error > m) {
        m = e.max_rel_error;
        w = e.name;
      }
    return w;
  }
};

// Compares analytic gradients (already populated in the store) against
// central finite differences of `loss_fn`, sampling up to `max_samples`
// elements per tensor. Relative error denominator is
// max(|analytic|, |numeric|, 5% of the tensor's gradient inf-norm, 1e-8):
// a central difference carries cancellation noise proportional to the
// objective's magnitude, so elements whose gradient sits orders below
// the rest of their tensor are judged against the tensor's scale — the
// check on them is then an absolute one at tolerance * that scale,
// which is still far below anything a real backward bug produces.
//
// The objective is piecewise smooth (|.| reconstruction terms, leaky
// rectifiers), so a probe step can straddle a kink, where a central
// difference does not estimate the derivative of either piece. Such
// points are detected by comparing the h and h/2 estimates — on a
// smooth stretch they agree to O(h^2), while a straddled kink leaves an
// O(1) discrepancy — and are replaced by a fresh sample. A wrong
// analytic gradient cannot hide behind this: at smooth points both
// estimates agree with the true derivative, so the mismatch survives.
//
// Intended for the 64-bit build; a float instantiation exists only so
// callers can reject it gracefully.
template <typename S>
GradCheckReport finite_diff_check(const std::function<double()>& loss_fn,
                                  ParamStore<S>& params, double step,
                                  double tolerance,
                                  std::size_t max_samples = 32,
                                  std::uint64_t seed = 0) {
  static_assert(sizeof(S) >= 1, "instantiation guard");
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be > 0");
  if (sizeof(S) != sizeof(double))
    throw std::invalid_argument("finite_diff_check: requires 64-bit precision mode");

  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng(seed);

  for (const auto& name : params.names()) {
    auto& entry = params.at(name);
    Var<S>& t = entry.value;
    t->ensure_grad();

    const std::size_t n = t->data.size();
    // full pool in shuffled order; walk it until max_samples land on
    // smooth stretches (or the tensor runs out of elements)
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t j = i + rng.uniform_int(n - i);
      std::swap(pool[i], pool[j]);
    }

    auto central = [&](std::size_t i, double h) {
      const S saved = t->data[i];
      t->data[i] = saved + static_cast<S>(h);
      const double f_plus = loss_fn();
      t->data[i] = saved - static_cast<S>(h);
      const double f_minus = loss_fn();
      t->data[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
        throw std::runtime_error("finite_diff_check: non-finite loss while probing " +
                                 name);
      return (f_plus - f_minus) / (2.0 * h);
    };

    double grad_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      grad_scale = std::max(grad_scale, std::abs(static_cast<double>(t->grad[i])));

    GradCheckEntry ge;
    ge.name = name;
    for (std::size_t k = 0; k < n && ge.checked < max_samples; ++k) {
      const std::size_t i = pool[k];
      const double numeric = central(i, step);
      const double half = central(i, step / 2.0);
      const double analytic = static_cast<double>(t->grad[i]);
      const double denom = std::max(
          {std::abs(analytic), std::abs(numeric), 0.05 * grad_scale, 1e-8});
      if (std::abs(numeric - half) > 0.5 * tolerance * denom) {
        ++ge.skipped;  // kink inside the probe interval
        continue;
      }
      const double rel = std::abs(analytic - numeric) / denom;
      ge.max_rel_error = std::max(ge.max_rel_error, rel);
      ++ge.checked;
    }
    if (ge.checked == 0)
      throw std::runtime_error("finite_diff_check: no smooth probe points in " + name);
    report.max_rel_error = std::max(report.max_rel_error, ge.max_rel_error);
    report.entries.push_back(std::move(ge));
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace ugatit
