#pragma once

#include "qrm/error.hpp"
#include "qrm/csv.hpp"
#include "qrm/grid.hpp"
#include "qrm/time_basis.hpp"
#include "qrm/cauchy_data.hpp"
#include "qrm/sources.hpp"
#include "qrm/forward.hpp"
#include "qrm/noise.hpp"
#include "qrm/projection.hpp"
#include "qrm/quasi_reversibility.hpp"
#include "qrm/reconstruction.hpp"
#include "qrm/harness.hpp"
