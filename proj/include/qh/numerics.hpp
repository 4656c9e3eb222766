#pragma once

#include "qh/errors.hpp"
#include "qh/numerics/branch.hpp"
#include "qh/numerics/contour.hpp"
#include "qh/numerics/defaults.hpp"
#include "qh/numerics/finite_difference.hpp"
#include "qh/numerics/ode.hpp"
#include "qh/numerics/polynomial.hpp"
#include "qh/numerics/quadrature.hpp"
