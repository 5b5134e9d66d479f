#pragma once

// Umbrella header: the whole library in one include.

#include "rankfuse/descriptives.hpp"
#include "rankfuse/error.hpp"
#include "rankfuse/format.hpp"
#include "rankfuse/jsonio.hpp"
#include "rankfuse/oracle.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/parallel.hpp"
#include "rankfuse/preprocess.hpp"
#include "rankfuse/rank.hpp"
#include "rankfuse/rng.hpp"
#include "rankfuse/robustness.hpp"
#include "rankfuse/simulate.hpp"
#include "rankfuse/stats.hpp"
