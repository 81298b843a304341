#pragma once

#include "parsplit/applications.hpp"
#include "parsplit/approximation.hpp"
#include "parsplit/block_vector.hpp"
#include "parsplit/coupling.hpp"
#include "parsplit/operators.hpp"
#include "parsplit/parallel.hpp"
#include "parsplit/power_iteration.hpp"
#include "parsplit/prox.hpp"
#include "parsplit/solver.hpp"
