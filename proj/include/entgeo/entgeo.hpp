#pragma once

// Umbrella header for the library modules (the CLI lives in entgeo/cli.hpp).

#include "entgeo/algebra.hpp"
#include "entgeo/entropy.hpp"
#include "entgeo/errors.hpp"
#include "entgeo/expfam.hpp"
#include "entgeo/families.hpp"
#include "entgeo/io.hpp"
#include "entgeo/lattice.hpp"
#include "entgeo/maxent.hpp"
#include "entgeo/spectral.hpp"
#include "entgeo/topology.hpp"
