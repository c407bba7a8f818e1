#pragma once

#include "spdepv/combinatorics.hpp"
#include "spdepv/error.hpp"
#include "spdepv/functional.hpp"
#include "spdepv/harness.hpp"
#include "spdepv/io.hpp"
#include "spdepv/limits.hpp"
#include "spdepv/quadrature.hpp"
#include "spdepv/random.hpp"
#include "spdepv/simulator.hpp"
#include "spdepv/spectrum.hpp"
#include "spdepv/validation.hpp"
#include "spdepv/variations.hpp"
