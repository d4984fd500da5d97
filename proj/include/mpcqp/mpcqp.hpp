#pragma once

// Umbrella header for the whole toolkit.

#include "mpcqp/block_matrix.hpp"
#include "mpcqp/bruteforce.hpp"
#include "mpcqp/csv.hpp"
#include "mpcqp/flops.hpp"
#include "mpcqp/json_io.hpp"
#include "mpcqp/kkt.hpp"
#include "mpcqp/linalg.hpp"
#include "mpcqp/matrix.hpp"
#include "mpcqp/model.hpp"
#include "mpcqp/profile_ldlt.hpp"
#include "mpcqp/rng.hpp"
#include "mpcqp/simulate.hpp"
#include "mpcqp/solver.hpp"
#include "mpcqp/sparse_qp.hpp"
#include "mpcqp/sweep.hpp"
#include "mpcqp/transform.hpp"
