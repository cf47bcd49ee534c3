#pragma once

#include "stickyflow/brownian.hpp"
#include "stickyflow/chaos.hpp"
#include "stickyflow/config.hpp"
#include "stickyflow/csv.hpp"
#include "stickyflow/experiments.hpp"
#include "stickyflow/flow.hpp"
#include "stickyflow/g_transform.hpp"
#include "stickyflow/parallel.hpp"
#include "stickyflow/propagator.hpp"
#include "stickyflow/quadrature.hpp"
#include "stickyflow/rng.hpp"
#include "stickyflow/semigroup.hpp"
#include "stickyflow/special_functions.hpp"
#include "stickyflow/stats.hpp"
#include "stickyflow/sticky.hpp"
#include "stickyflow/tabulated.hpp"
#include "stickyflow/test_function.hpp"
#include "stickyflow/time_grid.hpp"
