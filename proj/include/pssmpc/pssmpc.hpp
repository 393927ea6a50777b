#pragma once

#include "pssmpc/baseline_1d.hpp"
#include "pssmpc/cbf.hpp"
#include "pssmpc/config.hpp"
#include "pssmpc/errors.hpp"
#include "pssmpc/export.hpp"
#include "pssmpc/harness.hpp"
#include "pssmpc/linalg.hpp"
#include "pssmpc/mpc.hpp"
#include "pssmpc/qp.hpp"
#include "pssmpc/scenario.hpp"
#include "pssmpc/system.hpp"
