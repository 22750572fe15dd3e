#pragma once

#include "emx/baseline_matcher.hpp"
#include "emx/csv.hpp"
#include "emx/dataset.hpp"
#include "emx/desk_data.hpp"
#include "emx/error.hpp"
#include "emx/evaluation.hpp"
#include "emx/explainer.hpp"
#include "emx/external_matcher.hpp"
#include "emx/injection.hpp"
#include "emx/interpretable.hpp"
#include "emx/json_io.hpp"
#include "emx/matcher.hpp"
#include "emx/parallel.hpp"
#include "emx/record.hpp"
#include "emx/render.hpp"
#include "emx/report.hpp"
#include "emx/rng.hpp"
#include "emx/similarity.hpp"
#include "emx/surrogate.hpp"
#include "emx/tokenize.hpp"
