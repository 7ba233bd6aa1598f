#pragma once

#include "metfill/error.hpp"
#include "metfill/eval.hpp"
#include "metfill/geo.hpp"
#include "metfill/impute.hpp"
#include "metfill/ingest.hpp"
#include "metfill/model.hpp"
#include "metfill/pipeline.hpp"
#include "metfill/plot.hpp"
#include "metfill/synth.hpp"
#include "metfill/timestamp.hpp"
