#pragma once

// Umbrella header.

#include "wv/adiabatic.hpp"
#include "wv/csv.hpp"
#include "wv/ensemble.hpp"
#include "wv/errors.hpp"
#include "wv/hilbert.hpp"
#include "wv/impulsive.hpp"
#include "wv/pointer.hpp"
#include "wv/rng.hpp"
#include "wv/scenario.hpp"
