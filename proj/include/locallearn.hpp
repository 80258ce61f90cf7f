#pragma once

#include "locallearn/acceptance.hpp"
#include "locallearn/boolean.hpp"
#include "locallearn/channel.hpp"
#include "locallearn/csv.hpp"
#include "locallearn/dataset.hpp"
#include "locallearn/deep_targets.hpp"
#include "locallearn/error.hpp"
#include "locallearn/hopfield.hpp"
#include "locallearn/json_io.hpp"
#include "locallearn/moments.hpp"
#include "locallearn/network.hpp"
#include "locallearn/netsim.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"
#include "locallearn/rules.hpp"
#include "locallearn/ssh.hpp"
#include "locallearn/transfer.hpp"
