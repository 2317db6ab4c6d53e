// Convenience umbrella header.
#pragma once

#include "kinbm/data_io.hpp"
#include "kinbm/distributions.hpp"
#include "kinbm/model_selection.hpp"
#include "kinbm/params.hpp"
#include "kinbm/premium.hpp"
#include "kinbm/quadrature.hpp"
#include "kinbm/reference_fixtures.hpp"
#include "kinbm/regression.hpp"
#include "kinbm/rng.hpp"
#include "kinbm/special_functions.hpp"
