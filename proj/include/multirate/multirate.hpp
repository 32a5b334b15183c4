#pragma once

#include "multirate/config.hpp"
#include "multirate/contraction.hpp"
#include "multirate/core.hpp"
#include "multirate/dae_multirate.hpp"
#include "multirate/harness.hpp"
#include "multirate/linalg.hpp"
#include "multirate/ode_multirate.hpp"
#include "multirate/problems.hpp"
#include "multirate/steppers.hpp"
#include "multirate/waveform.hpp"
