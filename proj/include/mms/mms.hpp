#pragma once

#include "mms/asymptotics.hpp"
#include "mms/common.hpp"
#include "mms/covering.hpp"
#include "mms/functionals.hpp"
#include "mms/io.hpp"
#include "mms/nonlocal.hpp"
#include "mms/parallel.hpp"
#include "mms/report.hpp"
#include "mms/rng.hpp"
#include "mms/space.hpp"
