#pragma once

#include "sigctl/controllers.hpp"
#include "sigctl/decision.hpp"
#include "sigctl/dynamics.hpp"
#include "sigctl/error.hpp"
#include "sigctl/generators.hpp"
#include "sigctl/lp.hpp"
#include "sigctl/metrics.hpp"
#include "sigctl/network.hpp"
#include "sigctl/output.hpp"
#include "sigctl/scenario.hpp"
#include "sigctl/scenario_io.hpp"
#include "sigctl/simulation.hpp"
#include "sigctl/stability.hpp"
