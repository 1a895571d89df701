#pragma once

#include "bcast/baselines.hpp"
#include "bcast/broadcast_ops.hpp"
#include "bcast/decomposition.hpp"
#include "bcast/error.hpp"
#include "bcast/experiment.hpp"
#include "bcast/io.hpp"
#include "bcast/least_squares.hpp"
#include "bcast/random.hpp"
#include "bcast/tensor.hpp"
