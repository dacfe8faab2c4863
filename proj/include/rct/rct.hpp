#pragma once

#include "common.hpp"
#include "config.hpp"
#include "fem.hpp"
#include "jacobian.hpp"
#include "mesh.hpp"
#include "metrics.hpp"
#include "protocol.hpp"
#include "reconstruction.hpp"
#include "studies.hpp"
