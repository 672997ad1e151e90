#pragma once

#include "lqmfg/commands.hpp"
#include "lqmfg/expr.hpp"
#include "lqmfg/hilbert.hpp"
#include "lqmfg/lq_problem.hpp"
#include "lqmfg/master_nash.hpp"
#include "lqmfg/model_file.hpp"
#include "lqmfg/ode_oracle.hpp"
#include "lqmfg/riccati.hpp"
#include "lqmfg/simulate.hpp"
#include "lqmfg/vintage.hpp"
