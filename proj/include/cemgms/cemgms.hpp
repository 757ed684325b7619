#pragma once

#include "grid.hpp"
#include "medium.hpp"
#include "fem.hpp"
#include "aux_space.hpp"
#include "parallel.hpp"
#include "local_solver.hpp"
#include "cem_basis.hpp"
#include "correctors.hpp"
#include "msolve.hpp"
#include "models.hpp"
#include "experiment.hpp"
