#pragma once

#include "sdnsec/types.hpp"
#include "sdnsec/wire.hpp"
#include "sdnsec/crypto.hpp"
#include "sdnsec/topology.hpp"
#include "sdnsec/messages.hpp"
#include "sdnsec/switch.hpp"
#include "sdnsec/controller.hpp"
#include "sdnsec/simnet.hpp"
#include "sdnsec/scenario_file.hpp"
#include "sdnsec/report.hpp"
#include "sdnsec/fixtures.hpp"
