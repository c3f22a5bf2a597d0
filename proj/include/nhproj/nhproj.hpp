#pragma once

#include "nhproj/errors.hpp"
#include "nhproj/linalg.hpp"
#include "nhproj/manifold.hpp"
#include "nhproj/projectors.hpp"
#include "nhproj/rk4.hpp"
#include "nhproj/dynamics.hpp"
#include "nhproj/poisson.hpp"
#include "nhproj/scenarios.hpp"
