#pragma once

// Umbrella header for the NOON-state interferometry simulator.

#include "noonsim/config.hpp"
#include "noonsim/detection.hpp"
#include "noonsim/fitting.hpp"
#include "noonsim/fock.hpp"
#include "noonsim/io.hpp"
#include "noonsim/mat2.hpp"
#include "noonsim/optics.hpp"
#include "noonsim/rng.hpp"
#include "noonsim/runner.hpp"
#include "noonsim/scenarios.hpp"
#include "noonsim/selftest.hpp"
