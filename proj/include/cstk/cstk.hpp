#pragma once

#include "axis.hpp"
#include "error.hpp"
#include "forward.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "phantom.hpp"
#include "reconstruct.hpp"
#include "special.hpp"
#include "spectral.hpp"
#include "volterra.hpp"
