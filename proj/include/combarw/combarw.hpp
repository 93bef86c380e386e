#pragma once

#include "combarw/bounds.hpp"
#include "combarw/configuration.hpp"
#include "combarw/errors.hpp"
#include "combarw/instructions.hpp"
#include "combarw/layer_percolation.hpp"
#include "combarw/odometer.hpp"
#include "combarw/parallel.hpp"
#include "combarw/rng.hpp"
#include "combarw/shape.hpp"
#include "combarw/shape_laws.hpp"
#include "combarw/sites.hpp"
#include "combarw/stabilize.hpp"
#include "combarw/stats.hpp"
