#pragma once

#include <qmean/errors.hpp>
#include <qmean/rng.hpp>
#include <qmean/oracle.hpp>
#include <qmean/simcore.hpp>
#include <qmean/primitives.hpp>
#include <qmean/estimators.hpp>
#include <qmean/instance_io.hpp>
#include <qmean/harness.hpp>
