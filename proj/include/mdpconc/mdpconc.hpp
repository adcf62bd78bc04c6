#pragma once

#include "mdpconc/bounds.hpp"
#include "mdpconc/classify.hpp"
#include "mdpconc/errors.hpp"
#include "mdpconc/linalg.hpp"
#include "mdpconc/model.hpp"
#include "mdpconc/report.hpp"
#include "mdpconc/rng.hpp"
#include "mdpconc/sim.hpp"
#include "mdpconc/solve.hpp"
#include "mdpconc/stats.hpp"
