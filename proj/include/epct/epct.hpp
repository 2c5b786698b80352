#ifndef EPCT_EPCT_HPP
#define EPCT_EPCT_HPP

#include "charode.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "phase.hpp"
#include "profile.hpp"
#include "report.hpp"
#include "roots.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "thresholds.hpp"
#include "verify.hpp"

#endif
