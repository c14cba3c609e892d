#pragma once

#include "ovio/attitude.hpp"
#include "ovio/csv.hpp"
#include "ovio/flow_direction.hpp"
#include "ovio/geometry.hpp"
#include "ovio/harness.hpp"
#include "ovio/integrate.hpp"
#include "ovio/observability.hpp"
#include "ovio/riccati.hpp"
#include "ovio/sim.hpp"
