#pragma once

#include "fsodl/contact.hpp"
#include "fsodl/dqn.hpp"
#include "fsodl/error.hpp"
#include "fsodl/experiment.hpp"
#include "fsodl/mlp.hpp"
#include "fsodl/policies.hpp"
#include "fsodl/rng.hpp"
#include "fsodl/scenario.hpp"
#include "fsodl/simulator.hpp"
#include "fsodl/stats.hpp"
#include "fsodl/weather.hpp"
