#pragma once

#include "superlearn/bench.hpp"
#include "superlearn/core.hpp"
#include "superlearn/cv.hpp"
#include "superlearn/learner.hpp"
#include "superlearn/meta.hpp"
#include "superlearn/metrics.hpp"
#include "superlearn/report.hpp"
#include "superlearn/sim.hpp"
