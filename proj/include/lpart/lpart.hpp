#pragma once

#include "errors.hpp"
#include "fuzzy_art.hpp"
#include "lpart_model.hpp"
#include "fam.hpp"
#include "stream_io.hpp"
#include "experiment.hpp"
#include "report.hpp"
