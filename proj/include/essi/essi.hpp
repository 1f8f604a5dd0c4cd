#pragma once

#include "essi/core.hpp"
#include "essi/closed_form.hpp"
#include "essi/engine.hpp"
#include "essi/verifier.hpp"
#include "essi/transitions.hpp"
