#pragma once

// Umbrella header.

#include "homog/coefficients.hpp"
#include "homog/dg_solver.hpp"
#include "homog/experiments.hpp"
#include "homog/fem_space.hpp"
#include "homog/fiber_analysis.hpp"
#include "homog/gelfand.hpp"
#include "homog/metrics.hpp"
#include "homog/polynomial.hpp"
#include "homog/problem_file.hpp"
#include "homog/quadrature.hpp"
#include "homog/types.hpp"
