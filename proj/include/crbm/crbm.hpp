#pragma once

#include "crbm/errors.hpp"
#include "crbm/random.hpp"
#include "crbm/schema.hpp"
#include "crbm/csv.hpp"
#include "crbm/panel.hpp"
#include "crbm/encoding.hpp"
#include "crbm/crbm_core.hpp"
#include "crbm/model_io.hpp"
#include "crbm/stats.hpp"
#include "crbm/training.hpp"
#include "crbm/composite.hpp"
#include "crbm/pipeline.hpp"
#include "crbm/evaluation.hpp"
#include "crbm/sweep.hpp"
#include "crbm/defaults.hpp"
#include "crbm/synthetic.hpp"
#include "crbm/svg.hpp"

namespace crbm {
inline constexpr const char* kVersion = "0.1.0";
}
