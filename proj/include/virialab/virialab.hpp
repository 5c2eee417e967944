#pragma once

// Umbrella header.

#include "virialab/analysis.hpp"
#include "virialab/config.hpp"
#include "virialab/dynamics.hpp"
#include "virialab/errors.hpp"
#include "virialab/experiment.hpp"
#include "virialab/io.hpp"
#include "virialab/pde.hpp"
#include "virialab/potentials.hpp"
#include "virialab/rng.hpp"
#include "virialab/torus.hpp"
#include "virialab/version.hpp"
#include "virialab/virial.hpp"
