#pragma once

#include "sdeis/error.hpp"
#include "sdeis/model.hpp"
#include "sdeis/registry.hpp"
#include "sdeis/block_tridiag.hpp"
#include "sdeis/pathspace.hpp"
#include "sdeis/optimize.hpp"
#include "sdeis/rng.hpp"
#include "sdeis/samplers.hpp"
#include "sdeis/diagnostics.hpp"
#include "sdeis/experiments.hpp"
