#pragma once

// Umbrella header: continuation-method suboptimal MPC with a contraction
// certification toolkit.

#include "cmpc/benchmark.hpp"
#include "cmpc/certificates.hpp"
#include "cmpc/contraction.hpp"
#include "cmpc/continuation.hpp"
#include "cmpc/errors.hpp"
#include "cmpc/finite_diff.hpp"
#include "cmpc/lemma3.hpp"
#include "cmpc/ocp.hpp"
#include "cmpc/optimal.hpp"
#include "cmpc/plant.hpp"
