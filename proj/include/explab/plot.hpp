#pragma once

#include <string>

#include "explab/expressivity.hpp"

namespace explab {

/// Static SVG line chart of a layer sweep: x is layer index, one polyline of
/// mean expressivity per attribute with a +/-1 std band, and a legend.
std::string render_sweep_svg(const LayerSweepResult& sweep);

} // namespace explab
