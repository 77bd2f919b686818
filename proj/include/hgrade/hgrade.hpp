#pragma once

// Umbrella header for the headline humor grading toolkit.

#include "hgrade/errors.hpp"
#include "hgrade/rng.hpp"
#include "hgrade/text.hpp"
#include "hgrade/csv.hpp"
#include "hgrade/corpus.hpp"
#include "hgrade/tokenize.hpp"
#include "hgrade/nn.hpp"
#include "hgrade/backend.hpp"
#include "hgrade/encoding.hpp"
#include "hgrade/mlm.hpp"
#include "hgrade/grader.hpp"
#include "hgrade/pairwise.hpp"
#include "hgrade/evalreport.hpp"
#include "hgrade/attention_lens.hpp"
#include "hgrade/synthetic.hpp"
