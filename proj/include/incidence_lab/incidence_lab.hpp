#pragma once

#include "incidence_lab/branching.hpp"
#include "incidence_lab/cli_runner.hpp"
#include "incidence_lab/common.hpp"
#include "incidence_lab/config_io.hpp"
#include "incidence_lab/constructions.hpp"
#include "incidence_lab/finite_field.hpp"
#include "incidence_lab/heilbronn.hpp"
#include "incidence_lab/incidence_kernel.hpp"
#include "incidence_lab/phase_space.hpp"
#include "incidence_lab/regularity.hpp"
