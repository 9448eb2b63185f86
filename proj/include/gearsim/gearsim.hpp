#pragma once

#include "gearsim/bench.hpp"
#include "gearsim/config.hpp"
#include "gearsim/dynamics.hpp"
#include "gearsim/enhancement.hpp"
#include "gearsim/errors.hpp"
#include "gearsim/faults.hpp"
#include "gearsim/fft.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/io.hpp"
#include "gearsim/mesh_stiffness.hpp"
#include "gearsim/model.hpp"
#include "gearsim/profile_errors.hpp"
#include "gearsim/rng.hpp"
#include "gearsim/sigproc.hpp"
#include "gearsim/solver.hpp"
#include "gearsim/strain_energy.hpp"
