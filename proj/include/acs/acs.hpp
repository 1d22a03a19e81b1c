#pragma once

// Umbrella header for the library (everything except the CLI front end).

#include "acs/algorithms.hpp"
#include "acs/benchmarks.hpp"
#include "acs/coordinate.hpp"
#include "acs/errors.hpp"
#include "acs/harness.hpp"
#include "acs/linalg.hpp"
#include "acs/operators.hpp"
#include "acs/rng.hpp"
#include "acs/selector.hpp"
#include "acs/stats.hpp"
