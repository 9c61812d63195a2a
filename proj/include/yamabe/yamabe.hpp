#pragma once

#include "yamabe/admissibility.hpp"
#include "yamabe/catalog.hpp"
#include "yamabe/curvature.hpp"
#include "yamabe/energy.hpp"
#include "yamabe/errors.hpp"
#include "yamabe/flow.hpp"
#include "yamabe/integrator.hpp"
#include "yamabe/io.hpp"
#include "yamabe/mesh.hpp"
#include "yamabe/metric.hpp"
#include "yamabe/triangle.hpp"
