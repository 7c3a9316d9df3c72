#pragma once

#include "config.hpp"
#include "cooccurrence.hpp"
#include "corpus.hpp"
#include "date.hpp"
#include "error.hpp"
#include "measures.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "volatility.hpp"
