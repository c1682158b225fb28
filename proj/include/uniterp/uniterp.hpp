#pragma once

#include "uniterp/error.hpp"
#include "uniterp/grid.hpp"
#include "uniterp/harness.hpp"
#include "uniterp/kernel.hpp"
#include "uniterp/model_io.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/polynomial.hpp"
#include "uniterp/shape_tuning.hpp"
#include "uniterp/solver.hpp"
#include "uniterp/sparse_linalg.hpp"
#include "uniterp/types.hpp"
