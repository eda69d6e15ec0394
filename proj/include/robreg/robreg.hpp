#pragma once

#include "robreg/baselines.hpp"
#include "robreg/contamination.hpp"
#include "robreg/core.hpp"
#include "robreg/huber_regression.hpp"
#include "robreg/io.hpp"
#include "robreg/pipeline.hpp"
#include "robreg/projections.hpp"
#include "robreg/prox_gradient.hpp"
#include "robreg/random.hpp"
#include "robreg/tuning.hpp"
#include "robreg/weight_solver.hpp"
