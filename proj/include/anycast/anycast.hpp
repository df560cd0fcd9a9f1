#pragma once

#include "catchment.hpp"
#include "controller.hpp"
#include "error.hpp"
#include "estimator.hpp"
#include "playbook.hpp"
#include "replay.hpp"
#include "routing.hpp"
#include "service.hpp"
#include "topology.hpp"
#include "util.hpp"
