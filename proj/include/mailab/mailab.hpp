#pragma once

#include "mailab/game.hpp"
#include "mailab/policy.hpp"
#include "mailab/sampling.hpp"
#include "mailab/eval.hpp"
#include "mailab/regret.hpp"
#include "mailab/losses.hpp"
#include "mailab/oco.hpp"
#include "mailab/oracle.hpp"
#include "mailab/algorithms.hpp"
#include "mailab/fixtures.hpp"
#include "mailab/io.hpp"
