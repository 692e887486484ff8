#pragma once

#include "fwmkv/calculus.hpp"
#include "fwmkv/dynamics.hpp"
#include "fwmkv/families.hpp"
#include "fwmkv/fourier.hpp"
#include "fwmkv/kvconfig.hpp"
#include "fwmkv/measure.hpp"
#include "fwmkv/measure_io.hpp"
#include "fwmkv/rng.hpp"
#include "fwmkv/sobolev.hpp"
#include "fwmkv/torus.hpp"
#include "fwmkv/value.hpp"
