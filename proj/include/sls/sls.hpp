#pragma once

#include "sls/benchmark.hpp"
#include "sls/clsyn.hpp"
#include "sls/evalsim.hpp"
#include "sls/implsyn.hpp"
#include "sls/io.hpp"
#include "sls/linalg.hpp"
#include "sls/lti_core.hpp"
#include "sls/sparsity.hpp"
#include "sls/stability.hpp"
