#pragma once

// Umbrella header.

#include "thermoshift/common.hpp"
#include "thermoshift/word.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/potential.hpp"
#include "thermoshift/grid_function.hpp"
#include "thermoshift/atom_measure.hpp"
#include "thermoshift/ledger.hpp"
#include "thermoshift/transfer_operator.hpp"
#include "thermoshift/pressure.hpp"
#include "thermoshift/gibbs.hpp"
#include "thermoshift/equilibrium.hpp"
#include "thermoshift/config.hpp"
#include "thermoshift/runner.hpp"
