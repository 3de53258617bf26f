#pragma once

#include "omt/errors.hpp"
#include "omt/gauss.hpp"
#include "omt/numerics.hpp"
#include "omt/objective.hpp"
#include "omt/power_design.hpp"
#include "omt/procedures.hpp"
