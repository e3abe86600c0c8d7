#pragma once

#include "ppnp/baselines.hpp"
#include "ppnp/core.hpp"
#include "ppnp/data_term.hpp"
#include "ppnp/denoisers.hpp"
#include "ppnp/kernel.hpp"
#include "ppnp/linear_operators.hpp"
#include "ppnp/metrics.hpp"
#include "ppnp/pnp2.hpp"
#include "ppnp/pnp3.hpp"
#include "ppnp/preprocess.hpp"
#include "ppnp/proximal.hpp"
#include "ppnp/solver_config.hpp"
#include "ppnp/unrolled.hpp"
