#pragma once

#include "analytics.hpp"
#include "config.hpp"
#include "loop_sim.hpp"
#include "mux_controller.hpp"
#include "photon_stats.hpp"
