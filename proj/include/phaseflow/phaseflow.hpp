#pragma once

#include "phaseflow/grid.hpp"
#include "phaseflow/actions.hpp"
#include "phaseflow/forward.hpp"
#include "phaseflow/lddmm.hpp"
#include "phaseflow/template_est.hpp"
#include "phaseflow/baseline.hpp"
#include "phaseflow/simkit.hpp"
#include "phaseflow/io.hpp"
