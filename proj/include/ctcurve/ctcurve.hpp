#pragma once

#include "ctcurve/error.hpp"
#include "ctcurve/vec3.hpp"
#include "ctcurve/specfun.hpp"
#include "ctcurve/frenet.hpp"
#include "ctcurve/dopri5.hpp"
#include "ctcurve/oracle.hpp"
#include "ctcurve/closedform.hpp"
#include "ctcurve/validate.hpp"
#include "ctcurve/io.hpp"
