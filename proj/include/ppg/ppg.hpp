#ifndef PPG_PPG_HPP
#define PPG_PPG_HPP

#include "ppg/core.hpp"
#include "ppg/metrics.hpp"
#include "ppg/prox.hpp"
#include "ppg/solver.hpp"
#include "ppg/stochastic.hpp"
#include "ppg/coloring.hpp"
#include "ppg/problems.hpp"
#include "ppg/baselines.hpp"
#include "ppg/io.hpp"

#endif  // PPG_PPG_HPP
