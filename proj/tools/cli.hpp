#pragma once

// Batch scenario runner over the library: evolve, density, jacobi, entropy,
// unify, rmt, crosscheck.  Flat --key value flags with an optional --config
// key=value file (flags override the file).  Exit codes: 0 success, 2
// validation error, 3 solver non-convergence.

#include <map>
#include <string>

#include "liberation/measures.hpp"

namespace liberation::cli {

enum class Command { evolve, density, jacobi, entropy, unify, rmt, crosscheck };

struct Scenario {
    Command command;
    std::map<std::string, std::string> params;  // resolved flags, for provenance
};

// Preset name with optional ":" parameters, or "file:<path>" with measure
// JSON.  The measure is normalized to `level`.
SpectralMeasure parse_measure_spec(const std::string& text, const TraceParams& p,
                                   MeasureLevel level, std::size_t grid_n = 512);

int run(int argc, const char* const* argv);

}  // namespace liberation::cli
