#pragma once

#include "csv.hpp"
#include "cv.hpp"
#include "fdata.hpp"
#include "features.hpp"
#include "optim.hpp"
#include "sim.hpp"
#include "split.hpp"
#include "tree.hpp"
#include "weights.hpp"
