#pragma once

#include "cotlearn/errors.hpp"
#include "cotlearn/rational.hpp"
#include "cotlearn/seqcore.hpp"
#include "cotlearn/datasets.hpp"
#include "cotlearn/simplex.hpp"
#include "cotlearn/linthresh.hpp"
#include "cotlearn/turing.hpp"
#include "cotlearn/attention.hpp"
#include "cotlearn/circuit.hpp"
#include "cotlearn/lookup.hpp"
#include "cotlearn/learning.hpp"
#include "cotlearn/io.hpp"
#include "cotlearn/experiment.hpp"
