#pragma once

#include "logpen/error.hpp"
#include "logpen/grid.hpp"
#include "logpen/logsplit.hpp"
#include "logpen/penalty.hpp"
#include "logpen/potential.hpp"
#include "logpen/energy.hpp"
#include "logpen/nehari.hpp"
#include "logpen/solver.hpp"
#include "logpen/problem_spec.hpp"
#include "logpen/experiments.hpp"
#include "logpen/io.hpp"
