#pragma once

/// Umbrella header: the whole library in one include.

#include "pdirac/errors.hpp"
#include "pdirac/clifford.hpp"
#include "pdirac/field.hpp"
#include "pdirac/calculus.hpp"
#include "pdirac/mobius.hpp"
#include "pdirac/cauchy_riemann.hpp"
#include "pdirac/quadrature.hpp"
#include "pdirac/test_function.hpp"
#include "pdirac/weak_form.hpp"
#include "pdirac/solver.hpp"
#include "pdirac/sphere.hpp"
#include "pdirac/suites.hpp"
