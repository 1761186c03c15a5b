#pragma once

#include "mimiclab/linkage.hpp"

namespace mimiclab {

struct Mechanism {
  ChainModel main;
  PlaLinkage linkage;
};

/// Rigid 1:1 (or geared) coupling on a single pendulum joint; the degenerate
/// linkage used for closed-form checks.
Mechanism make_gear_linkage(double ratio = 1.0, double armature = 0.1);

/// Planar four-bar knee: hip (parent) + knee (output), motor crank on the
/// thigh driving the shank through a coupler link.
Mechanism make_four_bar_knee(double support_mass = 0.08);

/// 2-DoF pitch-roll ankle driven by two motor levers through pushrods
/// (rod-length closures); the coupled mechanism of the evaluation protocol.
Mechanism make_coupled_ankle(double support_mass = 0.33);

}  // namespace mimiclab
