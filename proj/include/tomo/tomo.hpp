#pragma once

// Umbrella header: the full two-qubit tomography toolkit.

#include "tomo/density.hpp"
#include "tomo/error_analysis.hpp"
#include "tomo/errors.hpp"
#include "tomo/gamma.hpp"
#include "tomo/io.hpp"
#include "tomo/linalg.hpp"
#include "tomo/measures.hpp"
#include "tomo/mle.hpp"
#include "tomo/powell.hpp"
#include "tomo/synthetic.hpp"
#include "tomo/tomography.hpp"
#include "tomo/types.hpp"
#include "tomo/validation.hpp"
#include "tomo/version.hpp"
#include "tomo/waveplates.hpp"
