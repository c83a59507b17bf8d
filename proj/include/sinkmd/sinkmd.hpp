#pragma once

#include "sinkmd/errors.hpp"
#include "sinkmd/kernel.hpp"
#include "sinkmd/projection.hpp"
#include "sinkmd/penalty.hpp"
#include "sinkmd/otx.hpp"
#include "sinkmd/solvers.hpp"
#include "sinkmd/oracle.hpp"
