#ifndef EHRELAY_EHRELAY_HPP_INCLUDED
#define EHRELAY_EHRELAY_HPP_INCLUDED

#include "channel.hpp"
#include "config.hpp"
#include "config_io.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "relay_state.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "selection.hpp"
#include "trace.hpp"

#endif // EHRELAY_EHRELAY_HPP_INCLUDED
