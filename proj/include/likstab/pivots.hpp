#pragma once

#include "likstab/adjustment.hpp"
#include "likstab/fit.hpp"
#include "likstab/tensors.hpp"

#include <optional>
#include <string>
#include <vector>

namespace likstab {

enum class PivotKind { R, WO, SO, WOC, SOC, WE, WEC, SE, SEC, RBAR, AWO, ASO };

/// Lower-case names: r, wo, so, woc, soc, we, wec, se, sec, rbar, awo, aso.
std::string to_string(PivotKind k);
PivotKind parse_pivot_kind(const std::string& name);
const std::vector<PivotKind>& all_pivot_kinds();
bool is_adjusted(PivotKind k);

struct PivotValue {
  PivotKind kind = PivotKind::R;
  double psi0 = 0.0;
  double value = 0.0;
  FitResult fit;
  ProfileResult profile;
  std::optional<AdjustedFit> adjusted;
};

/// Evaluates each requested pivot at psi0 by its defining formula, sharing the
/// global, constrained and adjusted fits. Adjusted kinds need `adjustment`.
std::vector<PivotValue> evaluate_pivots(const std::vector<PivotKind>& kinds, const Model& model, const Dataset& data,
                                        double psi0, const std::optional<AdjustmentSpec>& adjustment = std::nullopt,
                                        const std::optional<ParamPoint>& init = std::nullopt);

PivotValue evaluate_pivot(PivotKind kind, const Model& model, const Dataset& data, double psi0,
                          const std::optional<AdjustmentSpec>& adjustment = std::nullopt,
                          const std::optional<ParamPoint>& init = std::nullopt);

struct ExpansionCoefficients {
  Tensor3 xi3;              // xi^{rst}
  MatrixXd xi2;             // xi^{rs}
  double sigma_const = 0.0; // varsigma
};

/// Which xi^{rs} to use for WEC. `printed` repeats the first term twice,
/// `printed_without_duplicate` drops the repeat, `derived` is
/// xi_WE^{rs} + (1/2) tau (K + K_c) tau, which satisfies the WE/WEC
/// equivalence relation.
enum class WecVariant { derived, printed, printed_without_duplicate };
std::string to_string(WecVariant v);
WecVariant parse_wec_variant(const std::string& name);

ExpansionCoefficients expansion_coefficients(PivotKind kind, const CumulantTensors& tensors, const DerivedTensors& derived,
                                             const std::optional<AdjustmentInfo>& adj_info = std::nullopt,
                                             WecVariant wec = WecVariant::derived);

}  // namespace likstab
