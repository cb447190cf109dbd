#pragma once

#include "mmimo/channel.hpp"
#include "mmimo/precoding.hpp"

namespace mmimo {

// Everything both evaluation paths (Monte Carlo and deterministic equivalent)
// consume beyond the drop and allocation themselves.
struct ScenarioState {
    PowerProfile powers;
    std::vector<double> alpha;  // estimation coefficients, [j*B + b]
    CombinerWeights weights;    // gamma diagonal and phi residuals
};

inline ScenarioState build_scenario(
    const UserDrop& drop, const PilotAllocation& alloc, PowerProfile powers,
    SmmseRegularizer sc_mode = SmmseRegularizer::IntraPlusOther) {
    ScenarioState s;
    s.powers = std::move(powers);
    s.alpha = estimation_coefficients(drop, alloc, s.powers);
    s.weights = combiner_weights(drop, alloc, s.powers, s.alpha, sc_mode);
    return s;
}

}  // namespace mmimo
