#pragma once

// Umbrella header.

#include "analysis.hpp"
#include "branching.hpp"
#include "core.hpp"
#include "ea.hpp"
#include "experiments.hpp"
#include "fitness.hpp"
#include "ranking.hpp"
#include "spectral.hpp"
