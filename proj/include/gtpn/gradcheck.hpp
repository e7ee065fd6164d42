#pragma once

#include <string>

#include "gtpn/model.hpp"
#include "gtpn/policy.hpp"
#include "gtpn/reaction_io.hpp"
#include "gtpn/training.hpp"

namespace gtpn {

struct GradCheckReport {
  int n_params = 0;        // scalars compared
  double max_rel_err = 0;  // |ad - fd| / max(|ad|, |fd|, 1e-3)
  std::string worst_param;
  int worst_row = 0, worst_col = 0;
  double worst_ad = 0, worst_fd = 0;
  double loss = 0;                // composite loss at the unperturbed point
  bool all_terms_active = false;  // every loss component nonzero in the probe
  double seconds = 0;
};

// Builds a deterministic probe episode on `rec` that exercises every loss
// component (each gold edit played correctly, then one continue past the end),
// freezes its action sequence, top-K composition, advantages, and returns, and
// compares every parameter gradient of the composite loss against central
// finite differences of the frozen-plan replay. Requires cfg.t_max to exceed
// the gold length so the over-length step fits.
GradCheckReport gradcheck_model(const Config& cfg, const ReactionRecord& rec,
                                double h = 1e-5);

}  // namespace gtpn
