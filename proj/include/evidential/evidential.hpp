#pragma once

// Umbrella header for the evidential reasoning engine.

#include "evidential/bitset.hpp"
#include "evidential/cli.hpp"
#include "evidential/dag.hpp"
#include "evidential/domain.hpp"
#include "evidential/dst.hpp"
#include "evidential/errors.hpp"
#include "evidential/io.hpp"
#include "evidential/jointree.hpp"
#include "evidential/logical.hpp"
#include "evidential/mass.hpp"
#include "evidential/maxprod.hpp"
#include "evidential/network.hpp"
#include "evidential/query.hpp"
#include "evidential/revision.hpp"
#include "evidential/ruleview.hpp"
