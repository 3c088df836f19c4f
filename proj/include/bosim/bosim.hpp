#pragma once

#include "equilibrium.hpp"
#include "errors.hpp"
#include "kmc.hpp"
#include "log_math.hpp"
#include "master_equation.hpp"
#include "maxcut.hpp"
#include "ode.hpp"
#include "problem.hpp"
#include "quantum_feedback.hpp"
#include "rates.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "state_indexer.hpp"
#include "version.hpp"
