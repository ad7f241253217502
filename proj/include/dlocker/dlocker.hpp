#pragma once

#include "dlocker/analysis.hpp"
#include "dlocker/attacks.hpp"
#include "dlocker/config.hpp"
#include "dlocker/dram.hpp"
#include "dlocker/experiment.hpp"
#include "dlocker/isa.hpp"
#include "dlocker/lock.hpp"
#include "dlocker/model.hpp"
#include "dlocker/page_table.hpp"
#include "dlocker/report.hpp"
#include "dlocker/rng.hpp"
#include "dlocker/types.hpp"
#include "dlocker/victim_runtime.hpp"
#include "dlocker/weight_map.hpp"
