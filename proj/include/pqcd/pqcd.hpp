#pragma once

#include "pqcd/channel.hpp"
#include "pqcd/csv.hpp"
#include "pqcd/design.hpp"
#include "pqcd/detect.hpp"
#include "pqcd/experiments.hpp"
#include "pqcd/lp.hpp"
#include "pqcd/milp.hpp"
#include "pqcd/model_io.hpp"
#include "pqcd/partition.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/polytope.hpp"
#include "pqcd/privacy.hpp"
#include "pqcd/rng.hpp"
#include "pqcd/signal_model.hpp"
#include "pqcd/smooth.hpp"
#include "pqcd/svg.hpp"
