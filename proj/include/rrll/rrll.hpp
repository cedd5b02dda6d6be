#pragma once

// Umbrella header: the whole library.

#include "rrll/adam.hpp"
#include "rrll/checkpoint.hpp"
#include "rrll/cli.hpp"
#include "rrll/dataset.hpp"
#include "rrll/env.hpp"
#include "rrll/errors.hpp"
#include "rrll/infer.hpp"
#include "rrll/labels.hpp"
#include "rrll/metrics.hpp"
#include "rrll/mlp.hpp"
#include "rrll/policy.hpp"
#include "rrll/report.hpp"
#include "rrll/rng.hpp"
#include "rrll/run_config.hpp"
#include "rrll/synth.hpp"
#include "rrll/text.hpp"
#include "rrll/trainer.hpp"
#include "rrll/version.hpp"
