#pragma once

#include "whipple/controlled_motion.hpp"
#include "whipple/dynamics.hpp"
#include "whipple/error.hpp"
#include "whipple/integrator.hpp"
#include "whipple/io.hpp"
#include "whipple/kinematics.hpp"
#include "whipple/oracle_dae.hpp"
#include "whipple/params.hpp"
#include "whipple/stability.hpp"
