#pragma once
// Umbrella header: e-value merging and calibration, discovery vectors and
// matrices, conformal permutation e-values, the Gaussian testbed, and matrix
// rendering.

#include "conformal.hpp"    // IWYU pragma: export
#include "csvio.hpp"        // IWYU pragma: export
#include "discovery.hpp"    // IWYU pragma: export
#include "evalues.hpp"      // IWYU pragma: export
#include "parallel.hpp"     // IWYU pragma: export
#include "render.hpp"       // IWYU pragma: export
#include "rng.hpp"          // IWYU pragma: export
#include "simulation.hpp"   // IWYU pragma: export
