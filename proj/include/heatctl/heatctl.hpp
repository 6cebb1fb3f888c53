#pragma once

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/quadrature.hpp"
#include "heatctl/sdp/certificate.hpp"
#include "heatctl/sdp/problem.hpp"
#include "heatctl/sdp/solver.hpp"
#include "heatctl/sim/analysis.hpp"
#include "heatctl/sim/sampling.hpp"
#include "heatctl/sim/simulate.hpp"
#include "heatctl/sim/trajectory.hpp"
#include "heatctl/synthesis/closed_loop.hpp"
#include "heatctl/synthesis/gains.hpp"
#include "heatctl/synthesis/halanay.hpp"
#include "heatctl/synthesis/lmi.hpp"
#include "heatctl/synthesis/sweep.hpp"
