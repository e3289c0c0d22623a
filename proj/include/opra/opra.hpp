#pragma once

#include "opra/cpnet.hpp"
#include "opra/error.hpp"
#include "opra/matching.hpp"
#include "opra/mixture.hpp"
#include "opra/mov.hpp"
#include "opra/plackett_luce.hpp"
#include "opra/positional.hpp"
#include "opra/preference.hpp"
#include "opra/profile_format.hpp"
#include "opra/ranked_pairs.hpp"
#include "opra/rational.hpp"
#include "opra/rules.hpp"
#include "opra/sequential.hpp"
#include "opra/serial_dictatorship.hpp"
#include "opra/stv.hpp"
