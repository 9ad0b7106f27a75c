// Umbrella header for the singletsim toolkit.
#pragma once

#include "singletsim/analysis.hpp"
#include "singletsim/commands.hpp"
#include "singletsim/config.hpp"
#include "singletsim/errors.hpp"
#include "singletsim/hamiltonian.hpp"
#include "singletsim/presets.hpp"
#include "singletsim/propagator.hpp"
#include "singletsim/sequences.hpp"
#include "singletsim/spin_core.hpp"
#include "singletsim/trace.hpp"
#include "singletsim/trace_io.hpp"
